#include "creditvol/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "creditvol/errors.hpp"

#ifndef CREDITVOL_VERSION
#define CREDITVOL_VERSION "0.0.0"
#endif

namespace creditvol {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("sha256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("sha256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 15]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_bytes(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

const char* library_version() { return CREDITVOL_VERSION; }

nlohmann::json RunManifest::to_json() const {
  return nlohmann::json{{"command", command},   {"config", config},
                        {"seeds", seeds},       {"inputs", inputs},
                        {"outputs", outputs},   {"version", version},
                        {"duration_seconds", duration_seconds}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.version = j.at("version").get<std::string>();
    m.duration_seconds = j.at("duration_seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs[path.string()] = sha256_file(path);
}

void RunManifest::add_output(const std::filesystem::path& out_dir, const std::string& name) {
  outputs[name] = sha256_file(out_dir / name);
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  std::ofstream out(out_dir / kManifestName);
  if (!out) throw DataError("cannot write " + (out_dir / kManifestName).string());
  out << m.to_json().dump(2) << "\n";
}

RunManifest read_manifest(const std::filesystem::path& out_dir) {
  std::ifstream in(out_dir / kManifestName);
  if (!in) throw DataError("cannot open " + (out_dir / kManifestName).string());
  try {
    return RunManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

ManifestCheck verify_manifest(const std::filesystem::path& out_dir) {
  const RunManifest m = read_manifest(out_dir);
  ManifestCheck check;
  auto compare = [&](const std::filesystem::path& p, const std::string& want) {
    std::string got;
    try {
      got = sha256_file(p);
    } catch (const DataError&) {
      got = "missing";
    }
    if (got != want) {
      check.ok = false;
      check.mismatches.push_back(p.string());
    }
  };
  for (const auto& [path, digest] : m.inputs) compare(path, digest);
  for (const auto& [name, digest] : m.outputs) compare(out_dir / name, digest);
  return check;
}

}  // namespace creditvol
