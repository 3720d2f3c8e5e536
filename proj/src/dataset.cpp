#include "cmm/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cmm/util.hpp"

namespace cmm {

void CategoricalDataset::validate() const {
  if (var_names.size() != levels.size())
    throw DataError("dataset: variable name/level list size mismatch");
  for (std::size_t b = 0; b < levels.size(); ++b) {
    if (levels[b].size() < 2)
      throw DataError("dataset: variable '" + var_names[b] +
                      "' has fewer than two modalities");
  }
  for (const auto& row : cells) {
    if (row.size() != var_names.size())
      throw DataError("dataset: ragged row");
    for (std::size_t b = 0; b < row.size(); ++b)
      if (row[b] >= levels[b].size())
        throw DataError("dataset: cell index out of range");
  }
}

std::vector<std::string> parse_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CategoricalDataset CategoricalDataset::from_csv(std::istream& in) {
  CategoricalDataset ds;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty input");
  ds.var_names = parse_csv_row(line);
  if (ds.var_names.empty()) throw DataError("csv: empty header");
  const std::size_t B = ds.var_names.size();
  ds.levels.resize(B);
  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup(B);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = parse_csv_row(line);
    if (fields.size() != B)
      throw DataError("csv: line " + std::to_string(lineno) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(B));
    std::vector<std::uint32_t> row(B);
    for (std::size_t b = 0; b < B; ++b) {
      if (fields[b].empty())
        throw DataError("csv: empty cell at line " + std::to_string(lineno));
      auto it = lookup[b].find(fields[b]);
      if (it == lookup[b].end()) {
        const auto idx = static_cast<std::uint32_t>(ds.levels[b].size());
        lookup[b].emplace(fields[b], idx);
        ds.levels[b].push_back(fields[b]);
        row[b] = idx;
      } else {
        row[b] = it->second;
      }
    }
    ds.cells.push_back(std::move(row));
  }
  if (ds.cells.empty()) throw DataError("csv: no data rows");
  ds.validate();
  return ds;
}

CategoricalDataset CategoricalDataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return from_csv(in);
}

void CategoricalDataset::write_csv(std::ostream& out) const {
  for (std::size_t b = 0; b < var_names.size(); ++b)
    out << (b ? "," : "") << csv_escape(var_names[b]);
  out << "\n";
  for (const auto& row : cells) {
    for (std::size_t b = 0; b < row.size(); ++b)
      out << (b ? "," : "") << csv_escape(levels[b][row[b]]);
    out << "\n";
  }
}

void CategoricalDataset::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out);
}

CategoricalDataset aligned_to_schema(const CategoricalDataset& ds,
                                     const std::vector<std::string>& var_names,
                                     const std::vector<std::vector<std::string>>& levels) {
  if (ds.var_names != var_names)
    throw DataError("dataset variables do not match the model schema");
  std::vector<std::vector<std::uint32_t>> remap(ds.num_vars());
  for (int b = 0; b < ds.num_vars(); ++b) {
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::size_t h = 0; h < levels[b].size(); ++h)
      index[levels[b][h]] = static_cast<std::uint32_t>(h);
    remap[b].resize(ds.levels[b].size());
    for (std::size_t h = 0; h < ds.levels[b].size(); ++h) {
      auto it = index.find(ds.levels[b][h]);
      if (it == index.end())
        throw DataError("level '" + ds.levels[b][h] + "' of variable '" + var_names[b] +
                        "' is not in the model schema");
      remap[b][h] = it->second;
    }
  }
  CategoricalDataset out;
  out.var_names = var_names;
  out.levels = levels;
  out.cells = ds.cells;
  for (auto& row : out.cells)
    for (int b = 0; b < ds.num_vars(); ++b) row[b] = remap[b][row[b]];
  out.validate();
  return out;
}

}  // namespace cmm
