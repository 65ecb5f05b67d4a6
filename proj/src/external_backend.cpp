#include "adr/external_backend.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <unordered_map>

#include <json.hpp>

#include "adr/error.hpp"
#include "adr/util.hpp"

extern char** environ;

namespace adr {

namespace {

std::uint64_t parse_hex(const nlohmann::json& j, const char* key, const std::filesystem::path& file) {
  try {
    return std::stoull(j.at(key).get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw JobFailure(file.string() + ": missing or bad '" + key + "' checksum");
  }
}

class ExternalModel final : public TrainedModel {
 public:
  ExternalModel(const ExternalBackend::Options& options, std::filesystem::path dir)
      : options_(options), dir_(std::move(dir)) {
    const auto sums_path = dir_ / "checksums.json";
    nlohmann::json sums;
    try {
      sums = nlohmann::json::parse(read_file(sums_path));
    } catch (const nlohmann::json::exception& e) {
      throw JobFailure(sums_path.string() + ": " + e.what());
    }
    encoder_ = parse_hex(sums, "encoder", sums_path);
    classifier_ = parse_hex(sums, "classifier", sums_path);
    if (std::filesystem::exists(dir_ / "config.json")) config_ = parse_train_config_json(read_file(dir_ / "config.json"));
    if (std::filesystem::exists(dir_ / "train_log.csv")) {
      const auto rows = parse_csv(read_file(dir_ / "train_log.csv"));
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 3) continue;
        log_.push_back({std::stoul(rows[r][0]), std::stod(rows[r][1]), std::stod(rows[r][2])});
        if (best_epoch_ == 0 || log_.back().dev_macro_f1 > log_[best_epoch_ - 1].dev_macro_f1) best_epoch_ = log_.size();
      }
    }
  }

  std::string backend_name() const override { return "external"; }

  std::vector<double> score(std::span<const ProcessedDocument> docs) const override {
    static std::atomic<std::uint64_t> counter{0};
    const auto job_dir = dir_ / ("predict-" + std::to_string(counter++));
    std::filesystem::create_directories(job_dir);
    write_file_atomic(job_dir / "docs.jsonl", processed_jsonl(docs));
    nlohmann::ordered_json job;
    job["model_dir"] = dir_.string();
    job["docs"] = (job_dir / "docs.jsonl").string();
    job["output"] = (job_dir / "scores.csv").string();
    job["checkpoint"] = options_.checkpoint;
    write_file_atomic(job_dir / "job.json", job.dump(2));
    auto argv = options_.command;
    argv.push_back("predict");
    argv.push_back((job_dir / "job.json").string());
    const int status = run_process(argv);
    if (status != 0) throw JobFailure("external predict exited with status " + std::to_string(status));
    const auto rows = parse_csv(read_file(job_dir / "scores.csv"));
    std::unordered_map<std::string, double> by_id;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 2) continue;
      by_id[rows[r][0]] = std::stod(rows[r][1]);
    }
    std::vector<double> out;
    for (const auto& d : docs) {
      const auto it = by_id.find(d.id);
      if (it == by_id.end()) throw JobFailure("external predict: no score for '" + d.id + "'");
      out.push_back(it->second);
    }
    std::filesystem::remove_all(job_dir);
    return out;
  }

  std::uint64_t encoder_checksum() const override { return encoder_; }
  std::uint64_t classifier_checksum() const override { return classifier_; }

  void save(const std::filesystem::path& dir) const override {
    if (std::filesystem::exists(dir) && std::filesystem::equivalent(dir_, dir)) return;
    std::filesystem::create_directories(dir);
    std::filesystem::copy(dir_, dir,
                          std::filesystem::copy_options::recursive | std::filesystem::copy_options::overwrite_existing);
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  ExternalBackend::Options options_;
  std::filesystem::path dir_;
  std::uint64_t encoder_ = 0, classifier_ = 0;
};

}  // namespace

int run_process(const std::vector<std::string>& argv) {
  if (argv.empty()) throw JobFailure("run_process: empty command");
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid;
  const int rc = posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), environ);
  if (rc != 0) throw JobFailure("cannot start '" + argv[0] + "': " + std::strerror(rc));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw JobFailure("waitpid failed for '" + argv[0] + "'");
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

std::string processed_jsonl(std::span<const ProcessedDocument> docs) {
  std::string out;
  for (const auto& d : docs) {
    if (d.dropped) continue;
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text();
    j["label"] = d.label;
    j["lang"] = d.lang;
    out += j.dump() + "\n";
  }
  return out;
}

ExternalBackend::ExternalBackend(Options options) : options_(std::move(options)) {
  if (options_.command.empty()) throw ConfigError("external backend: empty command");
  if (options_.work_dir.empty()) options_.work_dir = std::filesystem::temp_directory_path() / "adr-external";
}

ModelPtr ExternalBackend::fit(int stage, const TrainedModel* init, std::span<const ProcessedDocument> train,
                              std::span<const ProcessedDocument> dev, const TrainConfig& config) const {
  config.validate();
  if (kept(train).empty()) throw ArgumentError("fit: empty training set");
  static std::atomic<std::uint64_t> counter{0};
  const auto out_dir = options_.work_dir / ("fit" + std::to_string(stage) + "-seed" + std::to_string(config.model_seed) +
                                            "-" + std::to_string(counter++));
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "train.jsonl", processed_jsonl(train));
  write_file_atomic(out_dir / "dev.jsonl", processed_jsonl(dev));
  write_file_atomic(out_dir / "config.json", train_config_json(config, "external"));
  nlohmann::ordered_json job;
  job["stage"] = stage;
  job["train"] = (out_dir / "train.jsonl").string();
  job["dev"] = (out_dir / "dev.jsonl").string();
  job["config"] = nlohmann::json::parse(train_config_json(config, "external"));
  job["checkpoint"] = options_.checkpoint;
  job["output_dir"] = out_dir.string();
  if (init) {
    const auto tmp = out_dir / "init";
    init->save(tmp);
    job["init"] = tmp.string();
  } else {
    job["init"] = nullptr;
  }
  write_file_atomic(out_dir / "job.json", job.dump(2));
  auto argv = options_.command;
  argv.push_back("fit");
  argv.push_back((out_dir / "job.json").string());
  const int status = run_process(argv);
  if (status != 0)
    throw JobFailure("external fit (stage " + std::to_string(stage) + ", seed " + std::to_string(config.model_seed) +
                     ") exited with status " + std::to_string(status));
  return std::make_shared<ExternalModel>(options_, out_dir);
}

ModelPtr ExternalBackend::fit_stage1(std::span<const ProcessedDocument> train, std::span<const ProcessedDocument> dev,
                                     const TrainConfig& config) const {
  return fit(1, nullptr, train, dev, config);
}

ModelPtr ExternalBackend::fit_stage2(const TrainedModel& init, std::span<const ProcessedDocument> train,
                                     std::span<const ProcessedDocument> dev, const TrainConfig& config) const {
  return fit(2, &init, train, dev, config);
}

ModelPtr ExternalBackend::load(const std::filesystem::path& dir) const {
  if (!std::filesystem::exists(dir / "checksums.json")) throw LoadError(dir.string() + ": no checksums.json");
  return std::make_shared<ExternalModel>(options_, dir);
}

}  // namespace adr
