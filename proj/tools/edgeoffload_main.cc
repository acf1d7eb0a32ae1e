// edgeoffload: run an ML server or worker, submit jobs, fire offload
// requests, and run simulations and cost reports.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "edgeoffload/cluster/client.h"
#include "edgeoffload/cluster/server.h"
#include "edgeoffload/cluster/worker_agent.h"
#include "edgeoffload/common/error.h"
#include "edgeoffload/common/stats.h"
#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/domain/profile_catalog.h"
#include "edgeoffload/simulator/cost.h"
#include "edgeoffload/simulator/engine.h"
#include "edgeoffload/simulator/latency.h"

namespace eo = edgeoffload;
namespace cl = edgeoffload::cluster;
namespace pr = edgeoffload::protocol;
namespace sim = edgeoffload::sim;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<pr::Endpoint> parse_servers(const std::string& list) {
  std::vector<pr::Endpoint> out;
  for (const auto& s : split(list, ',')) out.push_back(pr::parse_endpoint(s));
  if (out.empty()) throw eo::ValidationError("--server needs at least one host:port");
  return out;
}

eo::Json load_json_file(const std::string& path, eo::JsonLocator* locator = nullptr) {
  std::string text = eo::read_text_file(path);
  eo::Json j = eo::parse_json_text(text, path);
  if (locator != nullptr) *locator = eo::JsonLocator(text);
  return j;
}

// Blocks SIGINT/SIGTERM so the caller can sigwait for them after threads
// are started (new threads inherit the mask).
sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int wait_for_stop(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

struct ServerOptions {
  std::string listen = "127.0.0.1:7100";
  std::string state_dir = "state";
  std::string config;
};

int run_server(const ServerOptions& o) {
  cl::ServerConfig config;
  config.listen = pr::parse_endpoint(o.listen);
  config.state_dir = o.state_dir;
  if (!o.config.empty()) {
    eo::JsonLocator locator("");
    eo::Json j = load_json_file(o.config, &locator);
    eo::FieldErrors errors;
    cl::read_server_config(j, "", errors, config);
    errors.throw_if_any(fmt::format("server config {}", o.config), &locator);
  }
  sigset_t signals = block_stop_signals();
  cl::Server server(config);
  server.start();
  std::cout << server.address().to_string() << std::endl;
  std::cerr << fmt::format("server listening on {}, state in {}\n",
                           server.address().to_string(), o.state_dir);
  wait_for_stop(signals);
  server.stop();
  return kOk;
}

struct WorkerOptions {
  std::string servers;
  std::string capacity;
  std::string tags;
  std::string profiles = "table2_profiles";
  std::string id;
  std::string listen = "127.0.0.1:0";
  double jitter = -1.0;
  std::uint64_t seed = 1;
  double heartbeat_s = 2.0;
};

int run_worker(const WorkerOptions& o) {
  cl::WorkerAgentConfig config;
  config.servers = parse_servers(o.servers);
  config.capacity = eo::parse_resource_list(o.capacity);
  for (const auto& t : split(o.tags, ',')) config.tags.insert(t);
  config.profiles = eo::load_profile_catalog(o.profiles);
  config.listen = pr::parse_endpoint(o.listen);
  config.jitter_fraction = o.jitter;
  config.seed = o.seed;
  config.heartbeat_period_s = o.heartbeat_s;
  config.worker_id = o.id.empty() ? fmt::format("worker-{}", ::getpid()) : o.id;
  sigset_t signals = block_stop_signals();
  auto agent = std::make_unique<cl::WorkerAgent>(config);
  agent->start();
  std::cout << agent->address().to_string() << " " << config.worker_id << std::endl;
  std::cerr << fmt::format("worker {} on {}, capacity {}\n", config.worker_id,
                           agent->address().to_string(), config.capacity.to_string());
  wait_for_stop(signals);
  agent->stop();
  return kOk;
}

int run_submit(const std::string& servers, const std::string& job_file) {
  auto endpoints = parse_servers(servers);
  eo::JsonLocator locator("");
  eo::Json j = load_json_file(job_file, &locator);
  std::vector<eo::JobSpec> specs;
  eo::FieldErrors errors;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      specs.push_back(eo::read_job_spec(j[i], fmt::format("[{}]", i), errors));
    }
  } else {
    specs.push_back(eo::read_job_spec(j, "", errors));
  }
  errors.throw_if_any(fmt::format("job file {}", job_file), &locator);
  for (const auto& s : specs) s.validate();
  for (const auto& s : specs) {
    std::cout << s.job_id << " " << cl::submit_job(endpoints, s) << std::endl;
  }
  return kOk;
}

struct OffloadOptions {
  std::string server;
  std::string model;
  std::string payload;
  int repeat = 1;
  double timeout_s = 10.0;
};

int run_offload(const OffloadOptions& o) {
  if (o.repeat < 1) throw eo::ValidationError("--repeat must be >= 1");
  pr::Endpoint server = pr::parse_endpoint(o.server);
  std::string data = eo::read_text_file(o.payload);
  cl::OffloadClient client(server, std::chrono::milliseconds(
                                       static_cast<long>(o.timeout_s * 1000.0)));
  std::vector<double> rtts;
  int errors = 0;
  std::string last_error;
  for (int i = 1; i <= o.repeat; ++i) {
    try {
      cl::OffloadReply r = client.send(o.model, data);
      rtts.push_back(r.rtt_ms);
      std::cout << fmt::format(
          "request {} worker={} rtt_ms={:.3f} server_ms={:.3f} queue_ms={:.3f} "
          "service_ms={:.3f}\n",
          i, r.worker_id, r.rtt_ms, r.total_ms, r.queue_ms, r.service_ms)
                << std::flush;
    } catch (const pr::RemoteError& e) {
      ++errors;
      last_error = fmt::format("{}: {}", e.code(), e.what());
      std::cerr << fmt::format("request {} failed: {}\n", i, last_error);
    } catch (const eo::Error& e) {
      ++errors;
      last_error = e.what();
      std::cerr << fmt::format("request {} failed: {}\n", i, last_error);
    }
  }
  eo::SampleSummary s = eo::summarize(rtts);
  std::cout << fmt::format(
      "summary model={} n={} errors={} mean_ms={:.3f} variance_ms2={:.3f} p95_ms={:.3f} "
      "min_ms={:.3f} max_ms={:.3f}\n",
      o.model, s.count, errors, s.mean, s.variance, s.p95, s.min, s.max);
  std::cout.flush();
  if (errors > 0) {
    std::cerr << fmt::format("error: {} of {} requests failed; last: {}\n", errors, o.repeat,
                             last_error);
    return kRuntime;
  }
  return kOk;
}

struct SimulateOptions {
  std::string scenario;
  std::string policy;
  std::optional<std::uint64_t> seed;
  std::string csv;
};

int run_simulate(const SimulateOptions& o) {
  sim::Scenario s = sim::load_scenario(o.scenario);
  if (!o.policy.empty()) s.policy = sim::parse_policy(o.policy);
  if (o.seed) s.seed = *o.seed;
  sim::TraceReport r = sim::run_scenario(s);
  std::cout << sim::format_report(r);
  if (!o.csv.empty()) {
    std::ofstream out(o.csv, std::ios::binary);
    out << sim::format_csv(r);
    if (!out) throw eo::Error(fmt::format("cannot write {}", o.csv));
  }
  return kOk;
}

int run_cost(const std::string& pricing, std::optional<double> month_hours) {
  sim::PricingFile file = sim::load_pricing_file(pricing);
  if (month_hours) {
    if (!(*month_hours > 0.0)) throw eo::ValidationError("--month-hours must be > 0");
    file.month_hours = *month_hours;
    for (auto& row : file.rows) row.pricing.month_hours = *month_hours;
  }
  std::cout << sim::format_cost_table(sim::cost_table(file), file.month_hours);
  return kOk;
}

struct LatencyOptions {
  std::string profiles = "table2_profiles";
  int repeat = 100;
  std::optional<double> jitter;
  std::uint64_t seed = 1;
};

int run_latency(const LatencyOptions& o) {
  if (o.repeat < 1) throw eo::ValidationError("--repeat must be >= 1");
  eo::ProfileCatalog catalog = eo::load_profile_catalog(o.profiles);
  auto presets = sim::preset_profiles(catalog);
  std::cout << fmt::format("{:<28} {:<7} {:<4} {:>9} {:>10} {:>10} {:>9}\n", "model", "site",
                           "dev", "expected", "mean_ms", "p95_ms", "error_%");
  std::uint64_t stream = 0;
  for (const auto& m : catalog.models) {
    for (eo::Device d : {eo::Device::kGpu, eo::Device::kCpu}) {
      for (eo::Site site : {eo::Site::kCloud, eo::Site::kOnPrem}) {
        auto it = presets.find(sim::preset_key(m.model_name, site, d));
        if (it == presets.end()) continue;
        sim::LatencyProfile p = it->second;
        if (o.jitter) p.jitter_fraction = *o.jitter;
        p.validate();
        sim::JitterStream rng(o.seed, stream++);
        std::vector<double> xs;
        for (int i = 0; i < o.repeat; ++i) {
          xs.push_back(sim::roundtrip_latency(p, catalog.payload_bytes, rng));
        }
        eo::SampleSummary s = eo::summarize(xs);
        double expected = p.mean_ms(catalog.payload_bytes);
        std::cout << fmt::format("{:<28} {:<7} {:<4} {:>9.1f} {:>10.3f} {:>10.3f} {:>9.2f}\n",
                                 m.model_name, eo::to_string(site), eo::to_string(d), expected,
                                 s.mean, s.p95, 100.0 * (s.mean - expected) / expected);
      }
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge inference offloading: cluster, scheduler and simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edgeoffload 0.1.0");

  ServerOptions server;
  auto* srv = app.add_subcommand("server", "Run the ML server (control plane)");
  srv->add_option("--listen", server.listen, "host:port to bind (port 0 picks one)")
      ->capture_default_str();
  srv->add_option("--state-dir", server.state_dir, "Lease and checkpoint directory")
      ->capture_default_str();
  srv->add_option("--config", server.config, "JSON file with scheduler and liveness settings")
      ->check(CLI::ExistingFile);

  WorkerOptions worker;
  auto* wrk = app.add_subcommand("worker", "Run an ML worker with the synthetic executor");
  wrk->add_option("--server", worker.servers, "Comma-separated server addresses")->required();
  wrk->add_option("--capacity", worker.capacity, "e.g. gpus=1,cpu_cores=8,memory_mb=16384")
      ->required();
  wrk->add_option("--tags", worker.tags, "Comma-separated locality tags");
  wrk->add_option("--profiles", worker.profiles, "Latency profile catalog (name or file)")
      ->capture_default_str();
  wrk->add_option("--id", worker.id, "Worker id (default: worker-<pid>)");
  wrk->add_option("--listen", worker.listen, "host:port for server commands")
      ->capture_default_str();
  wrk->add_option("--jitter", worker.jitter, "Service-time jitter fraction in [0, 1)");
  wrk->add_option("--seed", worker.seed, "Jitter seed")->capture_default_str();
  wrk->add_option("--heartbeat", worker.heartbeat_s, "Heartbeat period in seconds")
      ->capture_default_str();

  std::string submit_servers, job_file;
  auto* sub = app.add_subcommand("submit", "Submit one or more jobs");
  sub->add_option("--server", submit_servers, "Comma-separated server addresses")->required();
  sub->add_option("--job-file", job_file, "JSON job spec or array of specs")
      ->required()
      ->check(CLI::ExistingFile);

  OffloadOptions offload;
  auto* off = app.add_subcommand("offload", "Send inference requests and report round trips");
  off->add_option("--server", offload.server, "Server address")->required();
  off->add_option("--model", offload.model, "Model name")->required();
  off->add_option("--payload", offload.payload, "File sent as the request data")
      ->required()
      ->check(CLI::ExistingFile);
  off->add_option("--repeat", offload.repeat, "Number of sequential requests")
      ->capture_default_str();
  off->add_option("--timeout", offload.timeout_s, "Per-request timeout in seconds")
      ->capture_default_str();

  SimulateOptions simulate;
  auto* simc = app.add_subcommand("simulate", "Run a scenario in virtual time");
  simc->add_option("--scenario", simulate.scenario, "Bundled name or scenario file")->required();
  simc->add_option("--policy", simulate.policy, "st-las, fifo or srsf-oracle");
  simc->add_option("--seed", simulate.seed, "Override the scenario seed");
  simc->add_option("--csv", simulate.csv, "Write a CSV report here");

  std::string pricing = "table1_pricing";
  std::optional<double> month_hours;
  auto* cost = app.add_subcommand("cost", "Monthly cost of one video stream");
  cost->add_option("--pricing", pricing, "Bundled name or pricing file")->capture_default_str();
  cost->add_option("--month-hours", month_hours, "Override the hours in a month");

  LatencyOptions latency;
  auto* lat = app.add_subcommand("latency", "Simulated round trips for every profile preset");
  lat->add_option("--profiles", latency.profiles, "Profile catalog")->capture_default_str();
  lat->add_option("--repeat", latency.repeat, "Requests per preset")->capture_default_str();
  lat->add_option("--jitter", latency.jitter, "Override every preset's jitter fraction");
  lat->add_option("--seed", latency.seed, "Jitter seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*srv) return run_server(server);
    if (*wrk) return run_worker(worker);
    if (*sub) return run_submit(submit_servers, job_file);
    if (*off) return run_offload(offload);
    if (*simc) return run_simulate(simulate);
    if (*cost) return run_cost(pricing, month_hours);
    if (*lat) return run_latency(latency);
  } catch (const eo::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const eo::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const eo::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const pr::RemoteError& e) {
    std::cerr << fmt::format("error: {}: {}\n", e.code(), e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
