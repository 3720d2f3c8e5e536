#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cmm/model.hpp"

namespace cmm {

// Self-contained fitted-model record: the variable schema travels with the
// parameters so a saved model can be applied to new data safely.
struct ModelRecord {
  std::vector<std::string> var_names;
  std::vector<std::vector<std::string>> levels;
  int g = 0;
  std::vector<std::vector<int>> sigma_blocks;  // variable indices
  std::vector<std::vector<int>> modes;         // [k][j]
  MixtureParams params;
  double loglik = 0.0;
  double bic = 0.0;
  long nu = 0;
  std::uint64_t seed = 0;

  ModelSpec to_spec() const;
  std::vector<long> var_mods() const;
};

// Re-expresses a record in another schema's level indexing (matching levels
// by name); the mode crossings are re-encoded accordingly. Used when two
// saved artifacts index the same nominal levels differently.
ModelRecord align_record(const ModelRecord& rec, const std::vector<std::string>& var_names,
                         const std::vector<std::vector<std::string>>& levels);

void write_model_json(std::ostream& out, const ModelRecord& rec);
void save_model_json(const std::string& path, const ModelRecord& rec);
ModelRecord read_model_json(std::istream& in);   // throws DataError on schema problems
ModelRecord load_model_json(const std::string& path);

}  // namespace cmm
