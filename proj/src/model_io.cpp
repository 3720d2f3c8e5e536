#include "cmm/model_io.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "cmm/encode.hpp"
#include "cmm/util.hpp"

namespace cmm {

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kSoftware = "cmm";

using json = nlohmann::ordered_json;

}  // namespace

std::vector<long> ModelRecord::var_mods() const {
  std::vector<long> mods(levels.size());
  for (std::size_t b = 0; b < levels.size(); ++b) mods[b] = static_cast<long>(levels[b].size());
  return mods;
}

ModelSpec ModelRecord::to_spec() const {
  return ModelSpec(g, BlockPartition(sigma_blocks, static_cast<int>(var_names.size())), modes,
                   var_mods());
}

ModelRecord align_record(const ModelRecord& rec, const std::vector<std::string>& var_names,
                         const std::vector<std::vector<std::string>>& levels) {
  if (rec.var_names != var_names)
    throw DataError("model variables do not match the target schema");
  const auto mods = rec.var_mods();
  std::vector<std::vector<std::uint32_t>> remap(mods.size());
  for (std::size_t b = 0; b < mods.size(); ++b) {
    if (levels[b].size() != rec.levels[b].size())
      throw DataError("level sets of variable '" + var_names[b] + "' differ in size");
    std::map<std::string, std::uint32_t> index;
    for (std::size_t h = 0; h < levels[b].size(); ++h)
      index[levels[b][h]] = static_cast<std::uint32_t>(h);
    remap[b].resize(mods[b]);
    for (long h = 0; h < mods[b]; ++h) {
      auto it = index.find(rec.levels[b][h]);
      if (it == index.end())
        throw DataError("level '" + rec.levels[b][h] + "' of variable '" + var_names[b] +
                        "' is not in the target schema");
      remap[b][h] = it->second;
    }
  }
  ModelRecord out = rec;
  out.levels = levels;
  const ModelSpec spec = rec.to_spec();
  std::vector<std::uint32_t> cell(mods.size(), 0);
  for (int k = 0; k < rec.g; ++k)
    for (int j = 0; j < spec.num_blocks(); ++j) {
      const auto& vars = spec.partition.block(j);
      for (auto& d : out.params.block[k][j].delta) {
        const auto vals = decode_crossing(d, vars, mods);
        for (std::size_t t = 0; t < vars.size(); ++t) cell[vars[t]] = remap[vars[t]][vals[t]];
        d = encode_cell(cell, vars, mods);
      }
    }
  return out;
}

void write_model_json(std::ostream& out, const ModelRecord& rec) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["software"] = kSoftware;
  j["seed"] = rec.seed;
  j["variables"] = json::array();
  for (std::size_t b = 0; b < rec.var_names.size(); ++b)
    j["variables"].push_back({{"name", rec.var_names[b]}, {"levels", rec.levels[b]}});
  j["g"] = rec.g;
  j["sigma"] = json::array();
  for (const auto& blk : rec.sigma_blocks) {
    json names = json::array();
    for (int v : blk) names.push_back(rec.var_names[v]);
    j["sigma"].push_back(names);
  }
  j["modes"] = rec.modes;
  j["pi"] = rec.params.pi;
  j["blocks"] = json::array();
  for (const auto& row : rec.params.block) {
    json jrow = json::array();
    for (const auto& bp : row) jrow.push_back({{"delta", bp.delta}, {"a", bp.a}});
    j["blocks"].push_back(jrow);
  }
  j["loglik"] = rec.loglik;
  j["bic"] = rec.bic;
  j["nu"] = rec.nu;
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed to write model JSON");
}

void save_model_json(const std::string& path, const ModelRecord& rec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_model_json(out, rec);
}

ModelRecord read_model_json(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw DataError("unsupported model schema version");
    ModelRecord rec;
    rec.seed = j.value("seed", std::uint64_t{0});
    std::map<std::string, int> var_index;
    for (const auto& v : j.at("variables")) {
      rec.var_names.push_back(v.at("name").get<std::string>());
      rec.levels.push_back(v.at("levels").get<std::vector<std::string>>());
      var_index[rec.var_names.back()] = static_cast<int>(rec.var_names.size()) - 1;
    }
    rec.g = j.at("g").get<int>();
    for (const auto& blk : j.at("sigma")) {
      std::vector<int> vars;
      for (const auto& name : blk) {
        auto it = var_index.find(name.get<std::string>());
        if (it == var_index.end())
          throw DataError("model JSON: unknown variable in sigma: " + name.get<std::string>());
        vars.push_back(it->second);
      }
      rec.sigma_blocks.push_back(std::move(vars));
    }
    rec.modes = j.at("modes").get<std::vector<std::vector<int>>>();
    rec.params.pi = j.at("pi").get<std::vector<double>>();
    for (const auto& jrow : j.at("blocks")) {
      std::vector<BlockParams> row;
      for (const auto& jb : jrow) {
        BlockParams bp;
        bp.delta = jb.at("delta").get<std::vector<std::uint32_t>>();
        bp.a = jb.at("a").get<std::vector<double>>();
        row.push_back(std::move(bp));
      }
      rec.params.block.push_back(std::move(row));
    }
    rec.loglik = j.at("loglik").get<double>();
    rec.bic = j.at("bic").get<double>();
    rec.nu = j.at("nu").get<long>();
    rec.params.validate(rec.to_spec());  // also validates the structural fields
    return rec;
  } catch (const json::exception& e) {
    throw DataError(std::string("model JSON missing or mistyped field: ") + e.what());
  }
}

ModelRecord load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return read_model_json(in);
}

}  // namespace cmm
