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

#include "tokalign/plan.hpp"

#include <cmath>

#include <json.hpp>

#include "tokalign/error.hpp"

namespace tokalign {
namespace {

const std::vector<std::string> kStageOneGroups = {"embedding", "lm_head"};
const std::vector<std::string> kAllGroups = {"embedding", "lm_head", "internal"};

template <class T>
T get(const nlohmann::json& j, const char* key, const char* what) {
    if (!j.contains(key)) fail_data(what, ": missing field \"", key, "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail_data(what, ": field \"", key, "\" has the wrong type");
    }
}

nlohmann::json parse(std::string_view text, const char* what) {
    try {
        return nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        fail_data(what, ": ", e.what());
    }
}

}  // namespace

void AdaptationPlan::validate() const {
    if (total_steps < 2) fail_usage("plan: total_steps must be >= 2");
    if (!(embed_frac >= 0.0 && embed_frac <= 1.0)) fail_usage("plan: embed_frac must be in [0, 1]");
    if (!(learning_rate > 0.0)) fail_usage("plan: learning_rate must be > 0");
    if (batch_tokens == 0) fail_usage("plan: batch_tokens must be > 0");
    std::uint64_t at = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& st = stages[s];
        if (st.start != at || st.end <= st.start) fail_usage("plan: stage \"", st.name, "\" breaks the step partition");
        at = st.end;
        const bool last = s + 1 == stages.size();
        if (last && st.parameter_groups != kAllGroups && stages.size() > 1)
            fail_usage("plan: final stage must tune all parameter groups");
        for (const auto& g : st.parameter_groups)
            if (g != "embedding" && g != "lm_head" && g != "internal") fail_usage("plan: unknown parameter group \"", g, "\"");
    }
    if (at != total_steps) fail_usage("plan: stages cover ", at, " of ", total_steps, " steps");
    if (stages.size() > 1 && stages.front().parameter_groups != kStageOneGroups)
        fail_usage("plan: first stage may only tune embedding and lm_head");
}

AdaptationPlan emit_two_stage_plan(std::uint64_t total_steps, double embed_frac, double learning_rate,
                                   std::uint64_t batch_tokens, std::string lr_schedule) {
    AdaptationPlan p;
    p.total_steps = total_steps;
    p.embed_frac = embed_frac;
    p.learning_rate = learning_rate;
    p.batch_tokens = batch_tokens;
    p.lr_schedule = std::move(lr_schedule);
    if (total_steps < 2) fail_usage("plan: total_steps must be >= 2");
    if (!(embed_frac >= 0.0 && embed_frac <= 1.0)) fail_usage("plan: embed_frac must be in [0, 1], got ", embed_frac);
    const auto boundary = static_cast<std::uint64_t>(std::llround(embed_frac * static_cast<double>(total_steps)));
    if (boundary > 0) p.stages.push_back({"embedding_warmup", 0, boundary, kStageOneGroups});
    if (boundary < total_steps) p.stages.push_back({"full_tuning", boundary, total_steps, kAllGroups});
    p.validate();
    return p;
}

void DistillConfig::validate() const {
    if (!(kd_weight >= 0.0) || !std::isfinite(kd_weight)) fail_usage("distill: kd_weight must be >= 0");
    if (!(task_sample_fraction >= 0.0 && task_sample_fraction <= 1.0))
        fail_usage("distill: task_sample_fraction must be in [0, 1]");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) fail_usage("distill: temperature must be > 0");
}

DistillConfig emit_distill_config(std::string teacher, std::string student, const DistillOverrides& overrides) {
    DistillConfig c;
    c.teacher_id = std::move(teacher);
    c.student_id = std::move(student);
    if (overrides.kd_weight) c.kd_weight = *overrides.kd_weight;
    if (overrides.task_sample_fraction) c.task_sample_fraction = *overrides.task_sample_fraction;
    if (overrides.temperature) c.temperature = *overrides.temperature;
    c.validate();
    return c;
}

std::string plan_to_json(const AdaptationPlan& plan) {
    nlohmann::ordered_json j;
    j["kind"] = "two_stage_adaptation";
    j["total_steps"] = plan.total_steps;
    j["embed_frac"] = plan.embed_frac;
    j["learning_rate"] = plan.learning_rate;
    j["batch_tokens"] = plan.batch_tokens;
    j["lr_schedule"] = plan.lr_schedule;
    auto& stages = j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : plan.stages) {
        nlohmann::ordered_json o;
        o["name"] = s.name;
        o["start"] = s.start;
        o["end"] = s.end;
        o["parameter_groups"] = s.parameter_groups;
        stages.push_back(std::move(o));
    }
    return j.dump(2) + "\n";
}

AdaptationPlan plan_from_json(std::string_view text) {
    const auto j = parse(text, "plan");
    if (get<std::string>(j, "kind", "plan") != "two_stage_adaptation") fail_data("plan: unexpected kind");
    AdaptationPlan p;
    p.total_steps = get<std::uint64_t>(j, "total_steps", "plan");
    p.embed_frac = get<double>(j, "embed_frac", "plan");
    p.learning_rate = get<double>(j, "learning_rate", "plan");
    p.batch_tokens = get<std::uint64_t>(j, "batch_tokens", "plan");
    p.lr_schedule = get<std::string>(j, "lr_schedule", "plan");
    if (!j.contains("stages") || !j["stages"].is_array()) fail_data("plan: missing stages array");
    for (const auto& s : j["stages"])
        p.stages.push_back({get<std::string>(s, "name", "plan stage"), get<std::uint64_t>(s, "start", "plan stage"),
                            get<std::uint64_t>(s, "end", "plan stage"),
                            get<std::vector<std::string>>(s, "parameter_groups", "plan stage")});
    try {
        p.validate();
    } catch (const Error& e) {
        fail_data(e.what());
    }
    return p;
}

std::string distill_to_json(const DistillConfig& cfg) {
    nlohmann::ordered_json j;
    j["kind"] = "token_level_distillation";
    j["teacher_id"] = cfg.teacher_id;
    j["student_id"] = cfg.student_id;
    j["kd_weight"] = cfg.kd_weight;
    j["task_sample_fraction"] = cfg.task_sample_fraction;
    j["temperature"] = cfg.temperature;
    j["loss"] = "lm + kd_weight * KL(teacher || student) on sampled fraction";
    return j.dump(2) + "\n";
}

DistillConfig distill_from_json(std::string_view text) {
    const auto j = parse(text, "distill config");
    if (get<std::string>(j, "kind", "distill config") != "token_level_distillation")
        fail_data("distill config: unexpected kind");
    DistillConfig c;
    c.teacher_id = get<std::string>(j, "teacher_id", "distill config");
    c.student_id = get<std::string>(j, "student_id", "distill config");
    c.kd_weight = get<double>(j, "kd_weight", "distill config");
    c.task_sample_fraction = get<double>(j, "task_sample_fraction", "distill config");
    c.temperature = get<double>(j, "temperature", "distill config");
    try {
        c.validate();
    } catch (const Error& e) {
        fail_data(e.what());
    }
    return c;
}

}  // namespace tokalign
