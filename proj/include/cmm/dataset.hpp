#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cmm {

// n individuals by B categorical variables; cell values are modality indices
// into per-variable level lists. Immutable after load.
struct CategoricalDataset {
  std::vector<std::string> var_names;
  std::vector<std::vector<std::string>> levels;  // levels[b], size m_b >= 2
  std::vector<std::vector<std::uint32_t>> cells;  // cells[i][b] < m_b

  int n() const { return static_cast<int>(cells.size()); }
  int num_vars() const { return static_cast<int>(var_names.size()); }
  long modality_count(int b) const { return static_cast<long>(levels[b].size()); }

  void validate() const;  // throws DataError on any invariant violation

  // First row is the header; modality sets are inferred in first-appearance
  // order; an empty cell is a load error.
  static CategoricalDataset from_csv(std::istream& in);
  static CategoricalDataset load_csv(const std::string& path);
  void write_csv(std::ostream& out) const;
  void save_csv(const std::string& path) const;
};

// Re-expresses a loaded dataset in another schema's level indexing (matching
// by level name). Needed because from_csv orders modalities by first
// appearance, which need not agree with a previously saved model. Variable
// names must match exactly; a level absent from the schema is a DataError.
CategoricalDataset aligned_to_schema(const CategoricalDataset& ds,
                                     const std::vector<std::string>& var_names,
                                     const std::vector<std::vector<std::string>>& levels);

// Low-level RFC-4180-style row reader shared with other CSV outputs.
std::vector<std::string> parse_csv_row(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace cmm
