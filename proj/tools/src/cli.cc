// Copyright 2026 The edupipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include "cli.h"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "edupipe/cluster.h"
#include "edupipe/pipeline/sample.h"
#include "edupipe/resilience.h"
#include "edupipe/simharness.h"

namespace edupipe::cli {

namespace fs = std::filesystem;

namespace {

Scalar ParseScalarValue(const std::string& v) {
  char* end = nullptr;
  errno = 0;
  long long i = std::strtoll(v.c_str(), &end, 10);
  if (!v.empty() && *end == '\0' && errno == 0) return static_cast<std::int64_t>(i);
  double d = std::strtod(v.c_str(), &end);
  if (!v.empty() && *end == '\0') return d;
  if (v == "true") return true;
  if (v == "false") return false;
  return v;
}

std::optional<Bytes> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool WriteFile(const fs::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  return static_cast<bool>(out);
}

bool WriteText(const fs::path& path, const std::string& text) {
  return WriteFile(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Flags shared by the pipeline commands. Only flags actually given land
// in the flag layer of the merged config.
struct PipelineFlags {
  std::string mode, loader, preproc, fe, metric, policy, store, wal, seed, config, nodes, workers;

  void Attach(CLI::App* app, bool with_mode) {
    if (with_mode) app->add_option("--mode", mode, "train or recognize");
    app->add_option("--loader", loader, "wav, sine, text, raw");
    app->add_option("--preproc", preproc, "preprocessing module, name or MARF id, optional :k=v,...");
    app->add_option("--fe", fe, "feature extraction module");
    app->add_option("--metric", metric, "classification module");
    app->add_option("--policy", policy, "crash recovery policy 0-4");
    app->add_option("--store", store, "remote store address host:port");
    app->add_option("--wal", wal, "directory for the local store's WAL");
    app->add_option("--seed", seed, "seed for demand ids");
    app->add_option("--config", config, "config file (default: $EDU_PIPE_CONFIG)");
    app->add_option("--nodes", nodes, "nodes in the local topology");
    app->add_option("--workers", workers, "workers per stage");
  }

  Configuration Layer() const {
    Configuration c;
    auto put = [&c](const char* key, const std::string& v) {
      if (!v.empty()) c.Set(key, v);
    };
    put("mode", mode);
    put("loader", loader);
    put("preproc", preproc);
    put("fe", fe);
    put("metric", metric);
    put("policy", policy);
    put("store", store);
    put("wal", wal);
    put("seed", seed);
    put("nodes", nodes);
    put("workers", workers);
    return c;
  }

  Configuration Merged() const {
    std::optional<std::string> file;
    if (!config.empty()) {
      file = config;
    } else if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
      file = env;
    }
    return MergeConfig(DefaultConfig(), file, Layer());
  }
};

struct Pipeline {
  JobSpec base;
  ClusterOptions options;
  std::size_t nodes = 1;
  std::size_t workers = 1;
  DurationMs timeout_ms = 600000;
};

Pipeline PipelineFrom(const Configuration& cfg) {
  Pipeline p;
  p.base.loader = ParseAudioFormat(cfg.Require("loader"));
  p.base.preprocessor = ParseModuleChoice(cfg.Require("preproc"));
  p.base.extractor = ParseModuleChoice(cfg.Require("fe"));
  p.base.classifier = ParseModuleChoice(cfg.Require("metric"));
  std::string policy = cfg.Require("policy");
  bool numeric = !policy.empty() && policy.find_first_not_of("0123456789") == std::string::npos;
  if (!numeric) Fail(ErrorCode::kBadConfig, "policy must be 0-4");
  p.options.manager.policy = PolicyFromCode(std::stoi(policy));
  p.options.seed = static_cast<std::uint64_t>(cfg.GetInt("seed", 1));
  if (auto store = cfg.Get("store"); store && !store->empty()) {
    auto [host, port] = ParseStoreAddress(*store);
    p.options.remote_store = std::make_shared<TcpTransport>(host, port);
  }
  if (auto wal = cfg.Get("wal"); wal && !wal->empty()) {
    fs::create_directories(*wal);
    p.options.wal = true;
    p.options.wal_path = *wal;
  }
  p.nodes = static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.GetInt("nodes", 1)));
  p.workers = static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.GetInt("workers", 1)));
  p.timeout_ms = cfg.GetInt("timeout_ms", p.timeout_ms);
  return p;
}

std::unique_ptr<Cluster> StartCluster(const Pipeline& p, const Clock& clock) {
  auto c = std::make_unique<Cluster>(p.options, &clock);
  c->Build(TopologySpec::Uniform(p.nodes, p.workers), clock.NowMs());
  return c;
}

void PrintInputErrors(const JobReport& r, std::ostream& err) {
  for (const auto& in : r.inputs) {
    if (!in.ok) err << "error: " << in.label << ": " << in.error << "\n";
  }
}

// corpus/<subject_id>/<files>; throws kMalformedFile.
std::map<SubjectId, std::vector<fs::path>> ReadCorpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) Fail(ErrorCode::kMalformedFile, dir.string() + " is not a directory");
  std::map<SubjectId, std::vector<fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory()) Fail(ErrorCode::kMalformedFile, "stray file in corpus root: " + name);
    if (name.empty() || name.size() > 9 || name.find_first_not_of("0123456789") != std::string::npos) {
      Fail(ErrorCode::kMalformedFile, "subject directory '" + name + "' is not a numeric id");
    }
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(entry.path())) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    if (files.empty()) Fail(ErrorCode::kMalformedFile, "subject directory '" + name + "' has no files");
    std::sort(files.begin(), files.end());
    out[static_cast<SubjectId>(std::stoul(name))] = std::move(files);
  }
  if (out.empty()) Fail(ErrorCode::kMalformedFile, dir.string() + " has no subject directories");
  return out;
}

int CmdTrain(const std::string& corpus_dir, const std::string& out_path, const std::string& json_path,
             const PipelineFlags& flags, std::ostream& out, std::ostream& err) {
  std::map<SubjectId, std::vector<fs::path>> corpus;
  try {
    corpus = ReadCorpus(corpus_dir);
  } catch (const Error& e) {
    err << "error: malformed corpus: " << e.what() << "\n";
    return kExitBadInput;
  }
  Pipeline p = PipelineFrom(flags.Merged());
  WallClock clock;
  auto cluster = StartCluster(p, clock);

  std::optional<TrainingSet> current;
  bool failures = false;
  std::string json = "[\n";
  for (const auto& [subject, files] : corpus) {
    JobSpec spec = p.base;
    spec.mode = JobMode::kTrain;
    spec.subject_id = subject;
    spec.training_set = current;
    for (const auto& f : files) {
      auto data = ReadFile(f);
      if (!data) {
        err << "error: cannot read " << f.string() << "\n";
        failures = true;
        continue;
      }
      spec.inputs.push_back({std::to_string(subject) + "/" + f.filename().string(), std::move(*data)});
    }
    JobReport r = RunJobLive(*cluster, spec, clock, p.timeout_ms);
    PrintInputErrors(r, err);
    failures = failures || r.partial();
    if (r.training_set) current = r.training_set;
    json += ReportToJson(r) + ",\n";
  }
  if (!current || current->empty()) {
    err << "error: nothing was trained\n";
    return kExitPipelineError;
  }
  if (!WriteFile(out_path, current->Encode())) {
    err << "error: cannot write " << out_path << "\n";
    return kExitPipelineError;
  }
  if (!json_path.empty()) {
    json.resize(json.size() - 2);
    WriteText(json_path, json + "\n]\n");
  }
  out << "training set " << out_path << " tag " << current->extractor_tag() << " hash "
      << current->ContentHash() << "\n";
  for (const auto& [subject, entry] : current->entries()) {
    out << "subject " << subject << " samples " << entry.count << "\n";
  }
  return failures ? kExitPipelineError : kExitOk;
}

int CmdRecognize(const std::vector<std::string>& inputs, const std::string& ts_path,
                 const std::string& json_path, const PipelineFlags& flags, std::ostream& out,
                 std::ostream& err) {
  auto ts_bytes = ReadFile(ts_path);
  if (!ts_bytes) {
    err << "error: cannot read training set " << ts_path << "\n";
    return kExitBadInput;
  }
  TrainingSet ts;
  try {
    ts = TrainingSet::Decode(*ts_bytes);
  } catch (const Error& e) {
    err << "error: invalid training set " << ts_path << ": " << e.what() << "\n";
    return kExitBadInput;
  }
  Pipeline p = PipelineFrom(flags.Merged());
  JobSpec spec = p.base;
  spec.mode = JobMode::kRecognize;
  spec.training_set = ts;
  for (const auto& path : inputs) {
    auto data = ReadFile(path);
    if (!data) {
      err << "error: cannot read " << path << "\n";
      return kExitBadInput;
    }
    spec.inputs.push_back({fs::path(path).filename().string(), std::move(*data)});
  }
  if (ts.extractor_tag() != ExtractorTag(spec)) {
    err << "error: training set was built with " << ts.extractor_tag() << ", pipeline extracts "
        << ExtractorTag(spec) << "\n";
    return kExitBadInput;
  }
  WallClock clock;
  auto cluster = StartCluster(p, clock);
  JobReport r = RunJobLive(*cluster, spec, clock, p.timeout_ms);
  out << ReportToText(r);
  if (!json_path.empty()) WriteText(json_path, ReportToJson(r));
  PrintInputErrors(r, err);
  return r.partial() ? kExitPipelineError : kExitOk;
}

int CmdSimulate(const std::string& path, const std::string& ledger_path, const std::string& policy,
                const std::string& seed, std::ostream& out, std::ostream& err) {
  Scenario sc;
  try {
    sc = LoadScenario(path);
    if (!policy.empty()) {
      if (policy.find_first_not_of("0123456789") != std::string::npos) Fail(ErrorCode::kBadConfig, "policy must be 0-4");
      sc.policy = PolicyFromCode(std::stoi(policy));
    }
    if (!seed.empty()) sc.seed = std::stoull(seed);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  Ledger l = Simulate(sc);
  std::istringstream dump(l.Dump());
  for (std::string line; std::getline(dump, line);) {
    if (line.rfind("exec ", 0) == 0 || line.rfind("claim ", 0) == 0) continue;
    out << line << "\n";
  }
  out << "ledger " << l.Digest() << "\n";
  if (!ledger_path.empty()) WriteText(ledger_path, l.Dump());
  auto failures = CheckAssertions(sc, l);
  for (const auto& f : failures) err << "assertion failed: " << f << "\n";
  return failures.empty() ? kExitOk : kExitAssertionFailed;
}

int InspectWal(const fs::path& dir, std::ostream& out, std::ostream& err) {
  auto wal = ReadFile(dir / "wal.log");
  if (!wal) {
    err << "error: no WAL at " << (dir / "wal.log").string() << "\n";
    return kExitBadInput;
  }
  if (wal->size() < 5 || std::string(wal->begin(), wal->begin() + 4) != "DWAL") {
    err << "error: not a WAL file\n";
    return kExitBadInput;
  }
  out << "wal version " << static_cast<int>((*wal)[4]) << " bytes " << wal->size() << "\n";
  ByteReader reader(ByteView(*wal).subspan(5));
  std::size_t records = 0;
  while (!reader.empty()) {
    auto rec = TryDecodeWalRecord(reader);
    if (!rec) break;
    ++records;
    out << "record seq " << rec->seq << " sig " << rec->signature.Hex() << " after " << rec->after.size()
        << "\n";
  }
  out << "records " << records << " torn_tail_bytes " << reader.remaining() << "\n";
  if (auto cp = ReadFile(dir / "checkpoint.bin"); cp && !cp->empty()) {
    try {
      Checkpoint c = DecodeCheckpoint(*cp);
      out << "checkpoint entries " << c.entries.size() << " through "
          << (c.through_seq ? std::to_string(*c.through_seq) : std::string("-")) << "\n";
    } catch (const Error& e) {
      err << "error: bad checkpoint: " << e.what() << "\n";
      return kExitBadInput;
    }
  }
  return kExitOk;
}

int InspectStore(const std::string& addr, std::ostream& out) {
  auto [host, port] = ParseStoreAddress(addr);
  FramedStoreClient client(std::make_shared<TcpTransport>(host, port));
  StoreStats s = client.Stats();
  out << "puts " << s.puts << "\nclaims " << s.claims << "\nhits " << s.hits << "\nmisses " << s.misses
      << "\nstores " << s.stores << "\nrequeues " << s.requeues << "\nlookups " << s.lookups
      << "\nduplicates " << s.duplicates << "\n";
  return kExitOk;
}

int CmdStoreServe(const std::string& bind, const std::string& wal_dir, std::int64_t duration_ms,
                  std::ostream& out) {
  auto [host, port] = ParseStoreAddress(bind, /*allow_any_port=*/true);
  DemandStore store;
  std::shared_ptr<Wal> wal;
  std::unique_ptr<DurableLog> log;
  if (!wal_dir.empty()) {
    fs::create_directories(wal_dir);
    auto storage = std::make_shared<FileStorage>((fs::path(wal_dir) / "wal.log").string());
    auto checkpoint = std::make_shared<FileStorage>((fs::path(wal_dir) / "checkpoint.bin").string());
    wal = std::make_shared<Wal>(storage);
    std::size_t recovered = RecoverStore(store, *wal, checkpoint.get());
    out << "recovered " << recovered << " results\n";
    log = std::make_unique<DurableLog>(wal, checkpoint);
    store.SetCommitLog(log.get());
  }
  StoreService service(&store);
  // Block the stop signals before threads start so only sigwait sees them.
  sigset_t stop;
  sigemptyset(&stop);
  sigaddset(&stop, SIGINT);
  sigaddset(&stop, SIGTERM);
  if (duration_ms <= 0) pthread_sigmask(SIG_BLOCK, &stop, nullptr);
  TcpFrameServer server(&service, host, port);
  out << "listening on " << host << ":" << server.port() << std::endl;
  if (duration_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(duration_ms));
  } else {
    int sig = 0;
    sigwait(&stop, &sig);
  }
  server.Stop();
  if (log) log->CheckpointNow(store);
  return kExitOk;
}

int CmdMakeCorpus(const fs::path& dir, std::size_t subjects, std::size_t train, std::size_t held_out,
                  std::uint64_t seed, std::ostream& out) {
  auto corpus = MakeSyntheticCorpus(subjects, train, held_out, seed);
  auto write = [&](const std::vector<SyntheticRecording>& recs, const fs::path& root) {
    for (const auto& r : recs) {
      fs::path subject_dir = root / std::to_string(r.subject);
      fs::create_directories(subject_dir);
      std::string name = r.label.substr(r.label.find('/') + 1) + ".wav";
      WriteFile(subject_dir / name, EncodeWavPcm16(GenerateSine(r.spec)));
    }
  };
  write(corpus.train, dir / "train");
  write(corpus.held_out, dir / "test");
  out << "wrote " << corpus.train.size() << " training and " << corpus.held_out.size()
      << " held-out recordings under " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

Configuration DefaultConfig() {
  return Configuration(Configuration::Map{
      {"mode", "recognize"},
      {"loader", "wav"},
      {"preproc", "raw"},
      {"fe", "fft"},
      {"metric", "euclidean"},
      {"policy", "0"},
      {"store", ""},
      {"wal", ""},
      {"seed", "1"},
      {"nodes", "1"},
      {"workers", "1"},
      {"timeout_ms", "600000"},
  });
}

Configuration MergeConfig(const Configuration& defaults, const std::optional<std::string>& config_file,
                          const Configuration& flags) {
  Configuration merged = defaults;
  if (config_file) merged.Merge(Configuration::FromIniFile(*config_file));
  merged.Merge(flags);
  return merged;
}

ModuleChoice ParseModuleChoice(std::string_view text) {
  ModuleChoice m;
  std::string s(text);
  auto colon = s.find(':');
  m.name = s.substr(0, colon);
  if (m.name.empty()) Fail(ErrorCode::kBadConfig, "empty module name in '" + s + "'");
  if (colon == std::string::npos) return m;
  std::stringstream rest(s.substr(colon + 1));
  for (std::string kv; std::getline(rest, kv, ',');) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) Fail(ErrorCode::kBadConfig, "module parameter '" + kv + "' is not key=value");
    m.params[kv.substr(0, eq)] = ParseScalarValue(kv.substr(eq + 1));
  }
  return m;
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"edupipe: demand-driven speaker-identification pipeline"};
  app.require_subcommand(1);

  PipelineFlags train_flags, recognize_flags, run_flags;
  std::string corpus_dir, out_path = "training_set.bin", json_path, ts_path;
  std::vector<std::string> inputs;
  auto* train = app.add_subcommand("train", "train a training set from corpus/<subject_id>/<files>");
  train->add_option("corpus", corpus_dir, "corpus directory")->required();
  train->add_option("-o,--out", out_path, "training set file to write");
  train->add_option("--json", json_path, "write the job reports as JSON");
  train_flags.Attach(train, false);

  auto* recognize = app.add_subcommand("recognize", "classify inputs against a training set");
  recognize->add_option("inputs", inputs, "input files")->required();
  recognize->add_option("-t,--training-set", ts_path, "training set file")->required();
  recognize->add_option("--json", json_path, "write the report as JSON");
  recognize_flags.Attach(recognize, false);

  std::vector<std::string> run_args;
  auto* run = app.add_subcommand("run", "train or recognize, chosen by --mode");
  run->add_option("args", run_args, "corpus directory (train) or input files (recognize)")->required();
  run->add_option("-o,--out", out_path, "training set file to write (train)");
  run->add_option("-t,--training-set", ts_path, "training set file (recognize)");
  run->add_option("--json", json_path, "write reports as JSON");
  run_flags.Attach(run, true);

  std::string scenario, ledger_path, sim_policy, sim_seed;
  auto* simulate = app.add_subcommand("simulate", "run a fault-injection scenario in the simulator");
  simulate->add_option("scenario", scenario, "scenario INI file")->required();
  simulate->add_option("--ledger", ledger_path, "write the full ledger here");
  simulate->add_option("--policy", sim_policy, "override the scenario's recovery policy");
  simulate->add_option("--seed", sim_seed, "override the scenario's seed");

  std::string inspect_wal, inspect_store;
  auto* inspect = app.add_subcommand("store-inspect", "print a WAL directory or a running store's counters");
  auto* wal_opt = inspect->add_option("--wal", inspect_wal, "WAL directory");
  inspect->add_option("--store", inspect_store, "store address host:port")->excludes(wal_opt);

  std::string bind = "127.0.0.1:7070", serve_wal;
  std::int64_t duration_ms = 0;
  auto* serve = app.add_subcommand("store-serve", "serve a demand store over TCP");
  serve->add_option("--bind", bind, "host:port to listen on");
  serve->add_option("--wal", serve_wal, "WAL directory");
  serve->add_option("--duration-ms", duration_ms, "stop after this long instead of on a signal");

  std::string corpus_out;
  std::size_t subjects = 4, per_train = 5, per_test = 5;
  std::uint64_t corpus_seed = 42;
  auto* make = app.add_subcommand("make-corpus", "write a synthetic WAV corpus");
  make->add_option("dir", corpus_out, "output directory")->required();
  make->add_option("--subjects", subjects);
  make->add_option("--train", per_train);
  make->add_option("--held-out", per_test);
  make->add_option("--seed", corpus_seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitBadInput;
  }

  try {
    if (*train) return CmdTrain(corpus_dir, out_path, json_path, train_flags, out, err);
    if (*recognize) return CmdRecognize(inputs, ts_path, json_path, recognize_flags, out, err);
    if (*run) {
      JobMode mode = ParseJobMode(run_flags.Merged().Require("mode"));
      if (mode == JobMode::kTrain) {
        if (run_args.size() != 1) {
          err << "error: train takes one corpus directory\n";
          return kExitBadInput;
        }
        return CmdTrain(run_args[0], out_path, json_path, run_flags, out, err);
      }
      if (ts_path.empty()) {
        err << "error: recognize needs --training-set\n";
        return kExitBadInput;
      }
      return CmdRecognize(run_args, ts_path, json_path, run_flags, out, err);
    }
    if (*simulate) return CmdSimulate(scenario, ledger_path, sim_policy, sim_seed, out, err);
    if (*inspect) {
      if (!inspect_wal.empty()) return InspectWal(inspect_wal, out, err);
      if (!inspect_store.empty()) return InspectStore(inspect_store, out);
      err << "error: store-inspect needs --wal or --store\n";
      return kExitBadInput;
    }
    if (*serve) return CmdStoreServe(bind, serve_wal, duration_ms, out);
    if (*make) return CmdMakeCorpus(corpus_out, subjects, per_train, per_test, corpus_seed, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kBadConfig:
      case ErrorCode::kInvalidSpec:
      case ErrorCode::kUnsupportedFormat:
      case ErrorCode::kUnsupportedMethod:
      case ErrorCode::kMalformedFile:
      case ErrorCode::kChecksumMismatch:
        return kExitBadInput;
      default:
        return kExitPipelineError;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPipelineError;
  }
  return kExitBadInput;
}

}  // namespace edupipe::cli
