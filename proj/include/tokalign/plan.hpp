// Copyright 2026 The tokalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Declarative training plans for an external trainer.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tokalign {

struct PlanStage {
    std::string name;
    std::uint64_t start = 0;  // inclusive
    std::uint64_t end = 0;    // exclusive
    std::vector<std::string> parameter_groups;

    friend bool operator==(const PlanStage&, const PlanStage&) = default;
};

struct AdaptationPlan {
    std::uint64_t total_steps = 1000;
    double embed_frac = 0.5;
    double learning_rate = 5e-5;
    std::uint64_t batch_tokens = 2097152;
    std::string lr_schedule = "constant";  // opaque to this toolkit
    std::vector<PlanStage> stages;

    /// Usage error if stages do not tile [0, total_steps) or group rules are broken.
    void validate() const;

    friend bool operator==(const AdaptationPlan&, const AdaptationPlan&) = default;
};

/// Stage 1 tunes embedding and lm_head for round(embed_frac * total_steps)
/// steps, stage 2 tunes everything for the rest. Empty stages are omitted.
AdaptationPlan emit_two_stage_plan(std::uint64_t total_steps = 1000, double embed_frac = 0.5,
                                   double learning_rate = 5e-5, std::uint64_t batch_tokens = 2097152,
                                   std::string lr_schedule = "constant");

struct DistillConfig {
    std::string teacher_id;
    std::string student_id;
    double kd_weight = 1.0;
    double task_sample_fraction = 0.15;
    double temperature = 1.0;

    void validate() const;

    friend bool operator==(const DistillConfig&, const DistillConfig&) = default;
};

struct DistillOverrides {
    std::optional<double> kd_weight;
    std::optional<double> task_sample_fraction;
    std::optional<double> temperature;
};

DistillConfig emit_distill_config(std::string teacher, std::string student, const DistillOverrides& overrides = {});

std::string plan_to_json(const AdaptationPlan& plan);
AdaptationPlan plan_from_json(std::string_view text);
std::string distill_to_json(const DistillConfig& cfg);
DistillConfig distill_from_json(std::string_view text);

}  // namespace tokalign
