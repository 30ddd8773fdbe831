#include "csfiqa/params.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "csfiqa/errors.hpp"

namespace csfiqa {

Tensor ParamStore::add(const std::string& name, std::vector<std::size_t> shape,
                       std::vector<double> data, bool frozen) {
  if (params_.count(name)) throw ConfigError("param '" + name + "' already exists");
  Tensor t = Tensor::from_data(std::move(shape), std::move(data), !frozen);
  params_.emplace(name, t);
  if (frozen) frozen_.insert(name);
  return t;
}

Tensor ParamStore::zeros(const std::string& name, std::vector<std::size_t> shape,
                         bool frozen) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return add(name, std::move(shape), std::vector<double>(n, 0.0), frozen);
}

Tensor ParamStore::full(const std::string& name, std::vector<std::size_t> shape,
                        double value, bool frozen) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return add(name, std::move(shape), std::vector<double>(n, value), frozen);
}

Tensor ParamStore::trunc_normal(const std::string& name, std::vector<std::size_t> shape,
                                double sigma, Rng& rng, bool frozen) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> data(n);
  for (double& v : data) v = rng.trunc_normal(sigma);
  return add(name, std::move(shape), std::move(data), frozen);
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown param '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

std::vector<Tensor> ParamStore::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : params_)
    if (!frozen_.count(name)) out.push_back(t);
  return out;
}

void save_checkpoint(const std::string& path, const std::string& config_text,
                     const ParamStore& store) {
  std::ostringstream manifest;
  manifest << "CSFIQA-CKPT 1\n";
  std::istringstream cfg(config_text);
  std::string line;
  std::size_t cfg_lines = 0;
  std::ostringstream cfg_block;
  while (std::getline(cfg, line)) {
    cfg_block << line << "\n";
    ++cfg_lines;
  }
  manifest << "config " << cfg_lines << "\n" << cfg_block.str();
  manifest << "arrays " << store.all().size() << "\n";
  std::size_t offset = 0;
  for (const auto& [name, t] : store.all()) {
    manifest << name << " " << t.ndim();
    for (std::size_t d : t.shape()) manifest << " " << d;
    manifest << " " << offset << "\n";
    offset += t.numel() * sizeof(double);
  }
  manifest << "DATA\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  const std::string header = manifest.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : store.all())
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

std::string load_checkpoint(
    const std::string& path,
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>>& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "CSFIQA-CKPT 1")
    throw DataError("checkpoint: bad magic in " + path);
  std::string word;
  std::size_t cfg_lines = 0;
  in >> word >> cfg_lines;
  if (word != "config") throw DataError("checkpoint: missing config section");
  std::getline(in, line);  // consume EOL
  std::ostringstream cfg;
  for (std::size_t i = 0; i < cfg_lines; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: truncated config");
    cfg << line << "\n";
  }
  std::size_t count = 0;
  in >> word >> count;
  if (word != "arrays") throw DataError("checkpoint: missing arrays section");
  std::getline(in, line);
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("checkpoint: truncated manifest");
    std::istringstream ls(line);
    Entry e;
    std::size_t ndim = 0;
    ls >> e.name >> ndim;
    e.shape.resize(ndim);
    for (std::size_t d = 0; d < ndim; ++d) ls >> e.shape[d];
    ls >> e.offset;
    if (!ls) throw DataError("checkpoint: malformed manifest line: " + line);
    entries.push_back(std::move(e));
  }
  if (!std::getline(in, line) || line != "DATA")
    throw DataError("checkpoint: missing DATA marker");
  const std::streampos data_start = in.tellg();
  for (const Entry& e : entries) {
    std::size_t n = 1;
    for (std::size_t d : e.shape) n *= d;
    std::vector<double> values(n);
    in.seekg(data_start + static_cast<std::streamoff>(e.offset));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataError("checkpoint: truncated data for array " + e.name);
    out[e.name] = {e.shape, std::move(values)};
  }
  return cfg.str();
}

void restore_params(ParamStore& store, const std::string& path) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> arrays;
  load_checkpoint(path, arrays);
  for (const auto& [name, t] : store.all()) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw DataError("checkpoint: missing array " + name);
    if (it->second.first != t.shape())
      throw DataError("checkpoint: shape mismatch for " + name);
    Tensor handle = t;  // shared node
    handle.mutable_data() = it->second.second;
  }
}

}  // namespace csfiqa
