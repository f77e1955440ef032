// Copyright (c) 2026 dtir contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dtir/model.hpp"
#include "dtir/train.hpp"

namespace dtir {

// Binary tensor container ("DTIR"): little-endian on disk, CRC32 trailer,
// written atomically via temp-then-rename.
void save_entries(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& entries);
std::vector<std::pair<std::string, Tensor>> load_entries(const std::string& path);

// Raw parameter persistence: values only, entries in store order. The loaded
// store carries default metadata; use save/load_model_checkpoint when layer
// and group information must survive.
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

// Self-describing model checkpoint: embeds the geometry (and whether the
// mixture adapters were active) so load can rebuild a fully annotated store.
void save_model_checkpoint(const ParamStore& params, const ModelSpec& spec, bool use_moe, const std::string& path);
struct LoadedModel {
    ParamStore params;
    ModelSpec spec;
    bool use_moe = false;
};
LoadedModel load_model_checkpoint(const std::string& path);

void save_importance(const ImportanceState& imp, const std::string& path);
ImportanceState load_importance(const std::string& path);

// Shared atomic text writer (temp + rename).
void atomic_write_text(const std::string& path, const std::string& text);

}  // namespace dtir
