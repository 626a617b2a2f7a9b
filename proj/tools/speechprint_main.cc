// Copyright 2026 The Speechprint Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "speechprint/bench.h"
#include "speechprint/clustering.h"
#include "speechprint/corpus.h"
#include "speechprint/degrade.h"
#include "speechprint/errors.h"
#include "speechprint/fileio.h"
#include "speechprint/fingerprint.h"
#include "speechprint/index.h"
#include "speechprint/log.h"
#include "speechprint/pipeline.h"
#include "speechprint/registry.h"
#include "speechprint/server.h"
#include "speechprint/spectral.h"
#include "speechprint/wav.h"

namespace fs = std::filesystem;
using namespace speechprint;

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

std::string LabelText(uint64_t label) {
  return label == kPendingLabel ? "pending" : std::to_string(label);
}

fs::path RegistryPathFor(const fs::path& index, const std::string& given) {
  if (!given.empty()) return given;
  fs::path p = index;
  p += ".labels";
  return p;
}

LabelRegistry LoadRegistryOrEmpty(const fs::path& path) {
  if (fs::exists(path)) return LabelRegistry::Load(path);
  return LabelRegistry();
}

std::vector<fs::path> WavFiles(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void PrintOutcome(const IdentifyOutcome& out, bool with_timing = true) {
  std::printf("status=%s", std::string(OutcomeStatusName(out.status)).c_str());
  if (out.status == OutcomeStatus::kError) {
    std::printf(" error=\"%s\"\n", out.error.c_str());
    return;
  }
  if (out.status != OutcomeStatus::kMiss) {
    std::printf(" file_id=%llu label=%s confidence=%.3f",
                static_cast<unsigned long long>(out.file_id),
                LabelText(out.label_id).c_str(), out.confidence);
  }
  if (with_timing) std::printf(" after_s=%.2f", out.latency_s);
  std::printf("\n");
}

struct ProfileFlags {
  std::string variant = "mel-vocal";
  double stride_ms = 25.0;

  void Add(CLI::App* app) {
    app->add_option("--variant", variant, "linear-vocal, mel-vocal or mel-wide")
        ->capture_default_str();
    app->add_option("--stride-ms", stride_ms, "spectrogram stride in ms")
        ->capture_default_str();
  }
  Profile Get() const { return Profile::ForVariant(ParseVariant(variant), stride_ms / 1000.0); }
};

struct QueryFlags {
  int votes = kDefaultMinBandVotes;
  double confidence = kDefaultMinConfidence;

  void Add(CLI::App* app) {
    app->add_option("--min-band-votes", votes, "bands a block must share to vote")
        ->capture_default_str();
    app->add_option("--min-confidence", confidence, "fraction of query blocks that must vote")
        ->capture_default_str();
  }
  QueryOptions Get() const { return {votes, confidence}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech fingerprinting: index, identify, label and benchmark early-media audio."};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "log progress");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "write the synthetic speech corpus as WAV files");
  std::string corpus_out;
  CorpusOptions corpus_opts;
  corpus_cmd->add_option("--out", corpus_out, "output directory")->required();
  corpus_cmd->add_option("--files", corpus_opts.n_files)->capture_default_str();
  corpus_cmd->add_option("--seed", corpus_opts.seed)->capture_default_str();
  corpus_cmd->add_option("--min-s", corpus_opts.min_duration_s)->capture_default_str();
  corpus_cmd->add_option("--max-s", corpus_opts.max_duration_s)->capture_default_str();

  // index
  auto* index_cmd = app.add_subcommand("index", "build and inspect the fingerprint index");
  index_cmd->require_subcommand(1);
  std::string index_path, registry_path;

  auto* build_cmd = index_cmd->add_subcommand("build", "enroll every WAV in a directory (ids 1..N)");
  std::string build_corpus;
  ProfileFlags build_profile;
  build_cmd->add_option("--corpus", build_corpus, "directory of WAV files")->required();
  build_cmd->add_option("--index", index_path, "index file to write")->required();
  build_cmd->add_option("--registry", registry_path, "label registry (default <index>.labels)");
  build_profile.Add(build_cmd);

  auto* add_cmd = index_cmd->add_subcommand("add", "enroll one WAV file under a given id");
  std::string add_file;
  uint64_t add_id = 0;
  add_cmd->add_option("--index", index_path)->required();
  add_cmd->add_option("--registry", registry_path);
  add_cmd->add_option("--id", add_id, "file id")->required();
  add_cmd->add_option("file", add_file)->required();

  auto* dedup_cmd = index_cmd->add_subcommand("dedup", "report near-duplicate enrolled files");
  double dedup_threshold = kDefaultDuplicateThreshold;
  int dedup_votes = kDefaultMinBandVotes;
  dedup_cmd->add_option("--index", index_path)->required();
  dedup_cmd->add_option("--threshold", dedup_threshold)->capture_default_str();
  dedup_cmd->add_option("--min-band-votes", dedup_votes)->capture_default_str();

  auto* stats_cmd = index_cmd->add_subcommand("stats", "print index statistics");
  stats_cmd->add_option("--index", index_path)->required();

  // identify / enroll
  auto* identify_cmd = app.add_subcommand("identify", "identify a WAV file as a stream");
  std::string identify_file, transcript;
  SessionOptions session_opts;
  bool no_enroll = false;
  size_t chunk_bytes = 4096;
  QueryFlags identify_query;
  identify_cmd->add_option("--index", index_path)->required();
  identify_cmd->add_option("--registry", registry_path);
  identify_cmd->add_option("--after-s", session_opts.decision_after_s, "first decision point")
      ->capture_default_str();
  identify_cmd->add_option("--max-s", session_opts.max_decision_s, "last decision point")
      ->capture_default_str();
  identify_cmd->add_flag("--no-enroll", no_enroll, "report a miss instead of enrolling");
  identify_cmd->add_option("--transcript", transcript, "transcript used when enrolling");
  identify_query.Add(identify_cmd);
  identify_cmd->add_option("file", identify_file)->required();

  auto* enroll_cmd = app.add_subcommand("enroll", "enroll a WAV file under a new id");
  std::string enroll_file;
  enroll_cmd->add_option("--index", index_path)->required();
  enroll_cmd->add_option("--registry", registry_path);
  enroll_cmd->add_option("--transcript", transcript, "transcript for the labeler");
  enroll_cmd->add_option("file", enroll_file)->required();

  // serve / client
  auto* serve_cmd = app.add_subcommand("serve", "run the streaming identification server");
  std::string listen = "127.0.0.1:7070";
  double window_ms = 20.0;
  QueryFlags serve_query;
  serve_cmd->add_option("--index", index_path)->required();
  serve_cmd->add_option("--registry", registry_path);
  serve_cmd->add_option("--listen", listen, "host:port")->capture_default_str();
  serve_cmd->add_option("--batch-window-ms", window_ms)->capture_default_str();
  serve_cmd->add_option("--after-s", session_opts.decision_after_s)->capture_default_str();
  serve_query.Add(serve_cmd);

  auto* client_cmd = app.add_subcommand("client", "stream a WAV file to a server");
  std::string connect = "127.0.0.1:7070", client_file;
  client_cmd->add_option("--connect", connect, "host:port")->capture_default_str();
  client_cmd->add_option("--chunk-bytes", chunk_bytes)->capture_default_str();
  client_cmd->add_option("file", client_file)->required();

  // degrade
  auto* degrade_cmd = app.add_subcommand("degrade", "write a deteriorated query clip");
  std::optional<double> snr_db;
  std::optional<double> offset_s;
  double rate = 1.0, len_s = 6.0;
  uint64_t seed = 1;
  std::string degrade_in, degrade_out;
  degrade_cmd->add_option("--snr-db", snr_db, "noise level; omit for no noise");
  degrade_cmd->add_option("--rate", rate, "playback rate")->capture_default_str();
  degrade_cmd->add_option("--len-s", len_s, "clip length")->capture_default_str();
  degrade_cmd->add_option("--offset-s", offset_s, "fixed start; random when omitted");
  degrade_cmd->add_option("--seed", seed)->capture_default_str();
  degrade_cmd->add_option("in", degrade_in)->required();
  degrade_cmd->add_option("out", degrade_out)->required();

  // image
  auto* image_cmd = app.add_subcommand("image", "dump the spectral image of a WAV file as CSV");
  std::string image_in, image_out, raw_out;
  ProfileFlags image_profile;
  image_profile.Add(image_cmd);
  image_cmd->add_option("--dump-raw", raw_out, "also write the 8 kHz float32 samples");
  image_cmd->add_option("in", image_in)->required();
  image_cmd->add_option("out", image_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "cluster transcripts and curate labels");
  train_cmd->require_subcommand(1);
  std::string transcripts_dir, stop_words, algo = "kmeans";
  TrainOptions train_opts;
  auto* cluster_cmd = train_cmd->add_subcommand("cluster", "cluster transcripts per language");
  cluster_cmd->add_option("--transcripts", transcripts_dir, "<dir>/<file_id>.txt")->required();
  cluster_cmd->add_option("--registry", registry_path)->required();
  cluster_cmd->add_option("--algo", algo)->check(CLI::IsMember({"kmeans", "dbscan"}))
      ->capture_default_str();
  cluster_cmd->add_option("--k", train_opts.k, "clusters per language")->capture_default_str();
  cluster_cmd->add_option("--eps", train_opts.eps)->capture_default_str();
  cluster_cmd->add_option("--min-pts", train_opts.min_pts)->capture_default_str();
  cluster_cmd->add_option("--seed", train_opts.seed)->capture_default_str();
  cluster_cmd->add_option("--top-k", train_opts.top_k)->capture_default_str();
  cluster_cmd->add_option("--stop-words", stop_words, "one word per line");

  auto* keywords_cmd = train_cmd->add_subcommand("keywords", "recompute keywords of every cluster");
  keywords_cmd->add_option("--transcripts", transcripts_dir)->required();
  keywords_cmd->add_option("--registry", registry_path)->required();
  keywords_cmd->add_option("--top-k", train_opts.top_k)->capture_default_str();
  keywords_cmd->add_option("--stop-words", stop_words);

  auto* name_cmd = train_cmd->add_subcommand("name-cluster", "give a cluster a human name");
  uint64_t label_id = 0, file_id = 0;
  std::string cluster_name;
  name_cmd->add_option("--registry", registry_path)->required();
  name_cmd->add_option("--label", label_id)->required();
  name_cmd->add_option("--name", cluster_name)->required();

  auto* assign_cmd = train_cmd->add_subcommand("assign", "assign a file to a cluster by hand");
  assign_cmd->add_option("--registry", registry_path)->required();
  assign_cmd->add_option("--file", file_id)->required();
  assign_cmd->add_option("--label", label_id)->required();

  auto* label_cmd = app.add_subcommand("label", "query the label registry");
  label_cmd->require_subcommand(1);
  auto* lookup_cmd = label_cmd->add_subcommand("lookup", "label of a file id");
  lookup_cmd->add_option("--registry", registry_path)->required();
  lookup_cmd->add_option("--file", file_id)->required();
  auto* list_cmd = label_cmd->add_subcommand("list", "print every cluster");
  list_cmd->add_option("--registry", registry_path)->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "accuracy experiment");
  bench_cmd->require_subcommand(1);
  auto* run_cmd = bench_cmd->add_subcommand("run", "run the grid and check the trends");
  std::string bench_corpus, grid_path, results_out, long_out;
  run_cmd->add_option("--corpus", bench_corpus, "directory of WAV files")->required();
  run_cmd->add_option("--grid", grid_path, "key=value grid file (defaults when omitted)");
  run_cmd->add_option("--out", results_out, "results CSV")->required();
  run_cmd->add_option("--long", long_out, "plot-ready long table");

  CLI11_PARSE(app, argc, argv);
  SetLogLevel(quiet ? LogLevel::kQuiet : verbose ? LogLevel::kInfo : LogLevel::kWarning);

  try {
    if (*corpus_cmd) {
      const auto files = SynthesizeCorpus(corpus_opts);
      WriteCorpus(corpus_out, files);
      std::printf("wrote %zu files to %s\n", files.size(), corpus_out.c_str());
    } else if (*build_cmd) {
      const Profile profile = build_profile.Get();
      const Fingerprinter fp(profile);
      RetrievalIndex index(profile);
      LabelRegistry registry = LoadRegistryOrEmpty(RegistryPathFor(index_path, registry_path));
      uint64_t id = 1;
      for (const auto& path : WavFiles(build_corpus)) {
        index.Enroll(fp.Compute(ReadWavFile(path), id));
        if (!registry.Lookup(id)) registry.MarkPending(id);
        std::printf("%llu\t%s\n", static_cast<unsigned long long>(id), path.filename().c_str());
        ++id;
      }
      registry.Save(RegistryPathFor(index_path, registry_path));
      index.Save(index_path);
    } else if (*add_cmd) {
      RetrievalIndex index = RetrievalIndex::Load(index_path);
      LabelRegistry registry = LoadRegistryOrEmpty(RegistryPathFor(index_path, registry_path));
      index.Enroll(Fingerprinter(index.profile()).Compute(ReadWavFile(add_file), add_id));
      if (!registry.Lookup(add_id)) registry.MarkPending(add_id);
      registry.Save(RegistryPathFor(index_path, registry_path));
      index.Save(index_path);
    } else if (*dedup_cmd) {
      const RetrievalIndex index = RetrievalIndex::Load(index_path);
      for (const auto& p : index.FindDuplicates(dedup_threshold, dedup_votes)) {
        std::printf("%llu\t%llu\t%.3f\n", static_cast<unsigned long long>(p.first),
                    static_cast<unsigned long long>(p.second), p.overlap);
      }
    } else if (*stats_cmd) {
      const RetrievalIndex index = RetrievalIndex::Load(index_path);
      const IndexStats s = index.Stats();
      std::printf("profile %s\nfiles %zu\nsub_fingerprints %zu\npostings %zu\ndistinct_keys %zu\n",
                  index.profile().ToString().c_str(), s.files, s.sub_fingerprints, s.postings,
                  s.distinct_keys);
    } else if (*identify_cmd || *enroll_cmd) {
      const fs::path reg_path = RegistryPathFor(index_path, registry_path);
      Engine engine(RetrievalIndex::Load(index_path), LoadRegistryOrEmpty(reg_path),
                    identify_query.Get());
      TranscriptLabeler labeler(engine.registry());
      std::optional<fs::path> t;
      if (!transcript.empty()) t = transcript;
      IdentifyOutcome out;
      if (*identify_cmd) {
        session_opts.enroll_on_miss = !no_enroll;
        IdentifySession session(engine, session_opts);
        const auto bytes = ReadFileBytes(identify_file);
        std::optional<IdentifyOutcome> early;
        for (size_t pos = 0; pos < bytes.size() && !early; pos += chunk_bytes) {
          early = session.Feed(std::span<const uint8_t>(bytes).subspan(
              pos, std::min(chunk_bytes, bytes.size() - pos)));
        }
        out = early ? *early : session.Finish(labeler, t);
      } else {
        out = engine.EnrollFile(ReadWavFile(enroll_file), labeler, t);
      }
      PrintOutcome(out);
      if (out.status == OutcomeStatus::kEnrolled) engine.Save(index_path, reg_path);
      return out.status == OutcomeStatus::kError ? 1 : 0;
    } else if (*serve_cmd) {
      const fs::path reg_path = RegistryPathFor(index_path, registry_path);
      Engine engine(RetrievalIndex::Load(index_path), LoadRegistryOrEmpty(reg_path),
                    serve_query.Get());
      ServerOptions opts;
      const size_t colon = listen.rfind(':');
      if (colon == std::string::npos) throw ConfigError("--listen needs host:port");
      opts.host = listen.substr(0, colon);
      opts.port = static_cast<uint16_t>(std::stoi(listen.substr(colon + 1)));
      opts.batch_window = std::chrono::microseconds(static_cast<long>(window_ms * 1000));
      opts.session = session_opts;
      opts.labeler = std::make_shared<TranscriptLabeler>(engine.registry());
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      Server server(engine, opts);
      server.Start();
      std::printf("listening on %s:%u\n", opts.host.c_str(), server.port());
      std::fflush(stdout);
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.Stop();
      engine.Save(index_path, reg_path);
      std::printf("served %zu sessions\n", server.sessions_served());
    } else if (*client_cmd) {
      const size_t colon = connect.rfind(':');
      if (colon == std::string::npos) throw ConfigError("--connect needs host:port");
      const auto bytes = ReadFileBytes(client_file);
      PrintOutcome(ClientIdentify(connect.substr(0, colon),
                                  static_cast<uint16_t>(std::stoi(connect.substr(colon + 1))),
                                  bytes, chunk_bytes),
                   /*with_timing=*/false);
    } else if (*degrade_cmd) {
      DeteriorationSpec spec;
      spec.snr_db = snr_db;
      spec.rate = rate;
      spec.query_len_s = len_s;
      if (offset_s) spec.offset = FixedOffset{*offset_s};
      WriteWavFile(degrade_out, MakeQuery(ReadWavFile(degrade_in), spec, seed));
    } else if (*image_cmd) {
      const AudioBuffer audio = Resample(ReadWavFile(image_in), kCanonicalSampleRate);
      const Profile profile = image_profile.Get();
      WriteFileAtomic(image_out, ImageToCsv(MakeImage(audio, profile.spectral)));
      if (!raw_out.empty()) WriteRawFloat32(raw_out, audio);
    } else if (*cluster_cmd) {
      LabelRegistry registry = LoadRegistryOrEmpty(registry_path);
      train_opts.algorithm = algo == "kmeans" ? ClusterAlgorithm::kKMeans : ClusterAlgorithm::kDbscan;
      if (!stop_words.empty()) train_opts.stop_words = ReadStopWords(stop_words);
      const auto report = TrainClusters(ReadTranscriptDir(transcripts_dir), train_opts, registry);
      for (uint64_t label : report.new_labels) {
        const ClusterInfo c = registry.Cluster(label);
        std::printf("%llu\t%s\t%s\t%llu\t", static_cast<unsigned long long>(c.label_id),
                    c.name.c_str(), c.language.c_str(),
                    static_cast<unsigned long long>(c.member_count));
        for (size_t i = 0; i < c.keywords.size(); ++i) {
          std::printf("%s%s", i ? "," : "", c.keywords[i].term.c_str());
        }
        std::printf("\n");
      }
      if (!report.unassigned.empty()) {
        std::printf("unassigned %zu (marked pending)\n", report.unassigned.size());
      }
      registry.Save(registry_path);
    } else if (*keywords_cmd) {
      LabelRegistry registry = LabelRegistry::Load(registry_path);
      std::set<std::string> stops;
      if (!stop_words.empty()) stops = ReadStopWords(stop_words);
      const auto docs = ReadTranscriptDir(transcripts_dir);
      const TfIdf tfidf = Vectorize(docs, stops);
      const auto entries = registry.Entries();
      for (const auto& c : registry.Clusters()) {
        std::vector<size_t> members;
        for (size_t d = 0; d < docs.size(); ++d) {
          auto it = entries.find(docs[d].file_id);
          if (it != entries.end() && it->second == c.label_id) members.push_back(d);
        }
        if (members.empty()) continue;
        registry.SetKeywords(c.label_id, ExtractKeywords(tfidf, members, train_opts.top_k));
      }
      registry.Save(registry_path);
    } else if (*name_cmd) {
      LabelRegistry registry = LabelRegistry::Load(registry_path);
      registry.NameCluster(label_id, cluster_name);
      registry.Save(registry_path);
    } else if (*assign_cmd) {
      LabelRegistry registry = LabelRegistry::Load(registry_path);
      registry.Assign(file_id, label_id);
      registry.Save(registry_path);
    } else if (*lookup_cmd) {
      const LabelRegistry registry = LabelRegistry::Load(registry_path);
      if (auto label = registry.Lookup(file_id)) {
        const ClusterInfo c = registry.Cluster(*label);
        std::printf("%llu\t%s\n", static_cast<unsigned long long>(*label), c.name.c_str());
      } else {
        std::printf(registry.IsPending(file_id) ? "pending\n" : "unknown\n");
        return 2;
      }
    } else if (*list_cmd) {
      std::fputs(LabelRegistry::Load(registry_path).Serialize().c_str(), stdout);
    } else if (*run_cmd) {
      const ExperimentGrid grid = grid_path.empty() ? ExperimentGrid() : ExperimentGrid::Load(grid_path);
      const auto results = RunGrid(fs::path(bench_corpus), grid, [](const CellResult& c) {
        LogInfo(std::string(VariantName(c.variant)) + " stride " + std::to_string(c.stride_ms) +
                " ms, len " + std::to_string(c.query_len_s) + " s: accuracy " +
                std::to_string(c.accuracy));
      });
      WriteResultsCsv(results_out, results);
      if (!long_out.empty()) WriteLongTable(long_out, results);
      const HypothesisReport report = CheckHypotheses(results);
      std::printf("h1 plateau        %s  %s\n", report.h1.pass ? "PASS" : "FAIL", report.h1.evidence.c_str());
      std::printf("h2 stride decay   %s  %s\n", report.h2.pass ? "PASS" : "FAIL", report.h2.evidence.c_str());
      std::printf("h3 variant parity %s  %s\n", report.h3.pass ? "PASS" : "FAIL", report.h3.evidence.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
