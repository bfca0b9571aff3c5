// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "finsep/errors.hpp"

namespace finsep::numcore {

namespace {

// Payload scalars are written little-endian regardless of host order.
void append_le(std::string& out, const void* src, size_t size) {
  const auto* p = static_cast<const uint8_t*>(src);
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  for (size_t i = size; i > 0; --i) out.push_back(static_cast<char>(p[i - 1]));
#else
  out.append(reinterpret_cast<const char*>(p), size);
#endif
}

template <typename T>
T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
  auto* b = reinterpret_cast<uint8_t*>(&v);
  for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
#endif
  return v;
}

}  // namespace

bool Checkpoint::has_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return true;
  return false;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw IoError("corrupt checkpoint: missing metadata key '" + key + "'");
}

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta)
    if (k == key) {
      v = value;
      return;
    }
  meta.emplace_back(key, value);
}

const CheckpointArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string out;
  out += "FINSEPCKPT " + std::to_string(c.version) + "\n";
  out += "arch " + c.arch + "\n";
  for (const auto& [k, v] : c.meta) out += "meta " + k + " " + v + "\n";
  for (const auto& a : c.arrays) {
    if (a.dtype != "f32" && a.dtype != "f64")
      throw std::invalid_argument("checkpoint: dtype must be f32 or f64");
    out += "tensor " + a.name + " " + a.dtype + " " + std::to_string(a.shape.size());
    for (int64_t d : a.shape) out += " " + std::to_string(d);
    out += "\n";
  }
  out += "data\n";
  for (const auto& a : c.arrays) {
    if (a.dtype == "f32") {
      for (double v : a.data) {
        const float f = static_cast<float>(v);
        append_le(out, &f, 4);
      }
    } else {
      for (double v : a.data) append_le(out, &v, 8);
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("cannot write " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Checkpoint c;
  size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) throw IoError("corrupt checkpoint: unterminated header in " + path);
    std::string line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    return line;
  };

  {
    std::istringstream ss(next_line());
    std::string magic;
    if (!(ss >> magic >> c.version) || magic != "FINSEPCKPT")
      throw IoError("corrupt checkpoint: bad magic in " + path);
    if (c.version != 1) throw IoError("corrupt checkpoint: unsupported version in " + path);
  }
  {
    std::istringstream ss(next_line());
    std::string tag;
    if (!(ss >> tag >> c.arch) || tag != "arch")
      throw IoError("corrupt checkpoint: missing arch line in " + path);
  }

  int64_t payload = 0;
  while (true) {
    std::string line = next_line();
    if (line == "data") break;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "meta") {
      std::string key, value;
      ss >> key;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (key.empty()) throw IoError("corrupt checkpoint: bad meta line in " + path);
      c.meta.emplace_back(key, value);
    } else if (tag == "tensor") {
      CheckpointArray a;
      size_t ndim = 0;
      if (!(ss >> a.name >> a.dtype >> ndim) || (a.dtype != "f32" && a.dtype != "f64"))
        throw IoError("corrupt checkpoint: bad tensor line in " + path);
      int64_t numel = 1;
      for (size_t i = 0; i < ndim; ++i) {
        int64_t d;
        if (!(ss >> d) || d < 0) throw IoError("corrupt checkpoint: bad tensor shape in " + path);
        a.shape.push_back(d);
        numel *= d;
      }
      payload += numel * (a.dtype == "f32" ? 4 : 8);
      a.data.resize(static_cast<size_t>(numel));
      c.arrays.push_back(std::move(a));
    } else {
      throw IoError("corrupt checkpoint: unknown header line in " + path);
    }
  }

  if (pos + static_cast<size_t>(payload) != bytes.size())
    throw IoError("corrupt checkpoint: payload size mismatch in " + path);

  const char* p = bytes.data() + pos;
  for (auto& a : c.arrays) {
    if (a.dtype == "f32") {
      for (double& v : a.data) {
        v = static_cast<double>(read_le<float>(p));
        p += 4;
      }
    } else {
      for (double& v : a.data) {
        v = read_le<double>(p);
        p += 8;
      }
    }
  }
  return c;
}

}  // namespace finsep::numcore
