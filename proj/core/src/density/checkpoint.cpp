#include "specprop/density/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace specprop::density {

namespace {

void put_le(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') return false;
  return true;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::map<std::string, std::string>& attributes) {
  const ad::ParameterStore& store = model.parameters();
  std::ostringstream header;
  header << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  header << "model " << model.kind() << '\n';
  header << "direction " << direction_name(model.direction()) << '\n';
  for (const auto& [k, v] : model.hyperparameters()) header << "hyper " << k << ' ' << format_double(v) << '\n';
  for (const auto& [k, v] : attributes) {
    if (!valid_token(k) || v.find('\n') != std::string::npos) {
      throw CheckpointError("checkpoint attribute '" + k + "' is not representable");
    }
    header << "attr " << k << ' ' << v << '\n';
  }
  std::size_t offset = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Matrix& m = store.value(i);
    header << "tensor " << store.name(i) << ' ' << m.rows() << ' ' << m.cols() << ' ' << offset << '\n';
    offset += m.size() * 8;
  }
  header << "data " << offset << '\n';

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open '" + tmp.string() + "' for writing");
    const std::string h = header.str();
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (std::size_t i = 0; i < store.size(); ++i)
      for (double v : store.value(i).span()) put_le(os, v);
    if (!os) throw CheckpointError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");

  auto fail = [&](const std::string& what) -> CheckpointError {
    return CheckpointError("checkpoint '" + path.string() + "': " + what);
  };

  std::string line;
  if (!std::getline(is, line)) throw fail("empty file");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kCheckpointMagic) throw fail("bad magic");
    if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));
  }

  struct TensorEntry {
    std::string name;
    std::size_t rows, cols, offset;
  };
  std::string kind;
  Direction direction = Direction::kLatentToData;
  std::map<std::string, double> hyper;
  std::map<std::string, std::string> attributes;
  std::vector<TensorEntry> tensors;
  std::size_t data_bytes = 0;
  bool have_data = false;

  while (!have_data && std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "model") {
      ls >> kind;
    } else if (key == "direction") {
      std::string d;
      ls >> d;
      direction = parse_direction(d);
    } else if (key == "hyper") {
      std::string name, value;
      ls >> name >> value;
      hyper[name] = std::stod(value);
    } else if (key == "attr") {
      std::string name;
      ls >> name;
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      attributes[name] = rest;
    } else if (key == "tensor") {
      TensorEntry e;
      if (!(ls >> e.name >> e.rows >> e.cols >> e.offset)) throw fail("malformed tensor line");
      tensors.push_back(e);
    } else if (key == "data") {
      if (!(ls >> data_bytes)) throw fail("malformed data line");
      have_data = true;
    } else {
      throw fail("unknown header line '" + line + "'");
    }
  }
  if (!have_data) throw fail("missing data section");

  std::vector<unsigned char> data(data_bytes);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data_bytes));
  if (static_cast<std::size_t>(is.gcount()) != data_bytes) throw fail("truncated data section");

  Checkpoint out;
  out.model = make_model(kind, hyper, direction);
  out.attributes = std::move(attributes);
  ad::ParameterStore& store = out.model->parameters();
  if (tensors.size() != store.size()) throw fail("tensor count does not match the model");
  for (const TensorEntry& e : tensors) {
    if (!store.contains(e.name)) throw fail("unexpected tensor '" + e.name + "'");
    const std::size_t idx = store.index_of(e.name);
    Matrix& m = store.value(idx);
    if (m.rows() != e.rows || m.cols() != e.cols) throw fail("tensor '" + e.name + "' has the wrong shape");
    if (e.offset + m.size() * 8 > data_bytes) throw fail("tensor '" + e.name + "' exceeds the data section");
    for (std::size_t k = 0; k < m.size(); ++k) m.span()[k] = get_le(data.data() + e.offset + 8 * k);
  }
  return out;
}

}  // namespace specprop::density
