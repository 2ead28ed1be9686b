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

// End-to-end run: ingest, co-occurrence, token vectors, alignment, evaluation,
// parameter remap and plan emission, driven by one JSON config and recorded in
// a manifest of content hashes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tokalign {

struct PipelineOptions {
    std::optional<std::uint64_t> seed;   // overrides the config's seed
    std::optional<unsigned> threads;     // overrides the config's threads
    bool use_cache = true;               // reuse stage outputs whose cache key and hashes match
    std::function<void(std::string_view)> log;
};

/// Relative paths in the config resolve against base_dir. Returns the manifest
/// text, which is also written to <output_dir>/manifest.json. A failing stage
/// is recorded in the manifest and rethrown as "stage <name>: <cause>" with
/// the original error kind.
std::string run_pipeline(std::string_view config_json, const std::filesystem::path& base_dir,
                         const PipelineOptions& options = {});
std::string run_pipeline_file(const std::filesystem::path& config_path, const PipelineOptions& options = {});

}  // namespace tokalign
