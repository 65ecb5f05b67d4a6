#include "adr/registry.hpp"

#include <mutex>

#include <json.hpp>

#include "adr/embeddings.hpp"
#include "adr/error.hpp"
#include "adr/external_backend.hpp"
#include "adr/stub_backend.hpp"
#include "adr/svm_backend.hpp"
#include "adr/util.hpp"

namespace adr {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

bool looks_local(const std::string& s) {
  return s.rfind("./", 0) == 0 || s.rfind("../", 0) == 0 || (s.size() > 3 && s.substr(s.size() - 3) == ".py");
}

}  // namespace

Registry Registry::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  Registry reg;
  reg.base_dir_ = base_dir;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("registry: ") + e.what());
  }
  if (!j.contains("models") || !j["models"].is_object()) throw ConfigError("registry: missing 'models' object");
  for (const auto& [id, entry] : j["models"].items()) {
    if (!entry.is_object() || !entry.contains("kind") || !entry["kind"].is_string())
      throw ConfigError("registry: model '" + id + "' needs a string 'kind'");
    const auto kind = entry["kind"].get<std::string>();
    if (kind != "stub" && kind != "svm" && kind != "external")
      throw ConfigError("registry: model '" + id + "' has unknown kind '" + kind + "'");
    reg.entries_[id] = {kind, entry.dump()};
  }
  return reg;
}

Registry Registry::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  return parse(text, path.parent_path());
}

std::string Registry::kind(const std::string& model_id) const {
  const auto it = entries_.find(model_id);
  if (it == entries_.end()) throw ConfigError("registry: unknown model_id '" + model_id + "'");
  return it->second.kind;
}

BackendPtr Registry::resolve(const std::string& model_id, const std::filesystem::path& work_dir) const {
  const auto it = entries_.find(model_id);
  if (it == entries_.end()) throw ConfigError("registry: unknown model_id '" + model_id + "'");
  const auto j = nlohmann::json::parse(it->second.json);
  try {
    if (it->second.kind == "stub") {
      StubBackend::Options o;
      o.buckets = j.value("buckets", o.buckets);
      o.hidden = j.value("hidden", o.hidden);
      return std::make_shared<StubBackend>(o);
    }
    if (it->second.kind == "svm") {
      if (!j.contains("embeddings")) throw ConfigError("registry: svm model '" + model_id + "' needs 'embeddings'");
      const auto path = resolve_path(base_dir_, j["embeddings"].get<std::string>());
      const bool aligned = j.value("aligned", false);
      // Embedding tables are large; share one instance per file.
      static std::mutex mu;
      static std::map<std::pair<std::string, bool>, EmbeddingPtr> cache;
      EmbeddingPtr emb;
      {
        std::lock_guard lock(mu);
        auto& slot = cache[{std::filesystem::weakly_canonical(path).string(), aligned}];
        if (!slot) {
          try {
            slot = load_vec_file(path, aligned);
          } catch (const LoadError& e) {
            throw ConfigError(std::string("registry: ") + e.what());
          }
        }
        emb = slot;
      }
      SvmOptions o;
      o.kernel = parse_svm_kernel(j.value("kernel", std::string("rbf")));
      o.c = j.value("C", o.c);
      o.gamma = j.value("gamma", o.gamma);
      o.balanced = j.value("balanced", o.balanced);
      return std::make_shared<SvmBackend>(emb, o);
    }
    ExternalBackend::Options o;
    for (const auto& part : j.at("command")) {
      const auto s = part.get<std::string>();
      o.command.push_back(looks_local(s) ? resolve_path(base_dir_, s).string() : s);
    }
    o.checkpoint = j.value("checkpoint", std::string());
    if (looks_local(o.checkpoint)) o.checkpoint = resolve_path(base_dir_, o.checkpoint).string();
    o.work_dir = work_dir.empty() ? std::filesystem::temp_directory_path() / "adr-external" : work_dir;
    if (j.contains("capabilities")) {
      const auto& c = j["capabilities"];
      o.capabilities = {c.value("supports_freezing", true), c.value("supports_class_weights", true),
                        c.value("is_multilingual", true)};
    }
    return std::make_shared<ExternalBackend>(o);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("registry: model '" + model_id + "': " + e.what());
  }
}

}  // namespace adr
