// Command-line front end: trace verification, oracle fuzzing, probe-count
// benchmarks and cache simulations. Exit codes: 0 success, 1 verification
// failure, 2 usage error.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "opq/external_io.hpp"
#include "opq/offline_oram.hpp"
#include "opq/primitives.hpp"
#include "opq/priority_queue.hpp"
#include "opq/reference/oracles.hpp"
#include "opq/selection.hpp"

namespace {

using namespace opq;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Config {
  std::string target = "pq";
  std::size_t capacity = 64;
  std::size_t ops = 1000;
  std::size_t pairs = 10;
  std::uint64_t seed = 1;
  std::string backend = "compaction";
  std::string out;
  bool corrupt_annotation = false;
  // bench
  unsigned min_log = 4;
  unsigned max_log = 12;
  // iosim
  std::string algo = "partition-aware";
  std::vector<std::size_t> sizes = {1024, 4096, 16384};
  std::vector<std::size_t> memories = {1024};
  std::vector<std::size_t> blocks = {64};
  std::string policy = "both";
  double epsilon = 1.0;
};

Backend parse_backend(const std::string& name) {
  if (name == "compaction" || name == "oblivious") return Backend{};
  if (name == "sort") return Backend{PartitionAlgorithm::SortNetwork, 64, 1.0};
  if (name == "cache-aware") return Backend::cache_aware(64);
  if (name == "cache-agnostic") return Backend::cache_agnostic();
  if (name == "naive") return Backend::naive();
  throw CLI::ValidationError("--backend", "unknown backend " + name);
}

// Runs one random sequence of operation-hiding PQ accesses and returns its
// trace (digest only, or with events when asked).
ProbeTrace run_pq_sequence(std::size_t capacity, std::size_t ops, std::uint64_t seed,
                           const Backend& backend, unsigned mode) {
  Memory memory(mode);
  ObliviousPriorityQueue q(memory, capacity, backend);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < ops; ++t) {
    auto kind = static_cast<AccessKind>(rng() % 3);
    if (kind == AccessKind::InsertAndMin && q.size() == capacity) kind = AccessKind::Min;
    q.access(kind, rng(), rng() % 1000);
  }
  return memory.recorder().snapshot();
}

std::vector<OramRequest> random_oram_stream(std::size_t universe, std::size_t ops,
                                            std::mt19937_64& rng) {
  std::vector<OramRequest> requests(ops);
  for (auto& r : requests) {
    r.op = rng() % 2 ? OramOp::Write : OramOp::Read;
    r.index = rng() % universe;
    r.value = rng() % 1000000;
  }
  return requests;
}

ProbeTrace run_oram_sequence(std::size_t universe, std::size_t ops, std::uint64_t seed,
                             const Backend& backend, unsigned mode) {
  Memory memory(mode);
  std::mt19937_64 rng(seed);
  OramRunOptions options;
  options.backend = backend;
  run_oram(memory, random_oram_stream(universe, ops, rng), universe, options);
  return memory.recorder().snapshot();
}

void report_divergence(std::ostream& err, const ProbeTrace& a, const ProbeTrace& b) {
  const std::size_t common = std::min(a.events.size(), b.events.size());
  std::size_t i = 0;
  while (i < common && a.events[i] == b.events[i]) ++i;
  err << "first divergence at event " << i << ": ";
  const auto show = [&](const ProbeTrace& t) {
    if (i < t.events.size()) {
      err << (t.events[i].op == ProbeOp::Read ? "R@" : "W@") << t.events[i].address;
    } else {
      err << "<end>";
    }
  };
  show(a);
  err << " vs ";
  show(b);
  err << " (lengths " << a.events.size() << ", " << b.events.size() << ")\n";
}

int cmd_verify_trace(const Config& c, std::ostream& out) {
  const Backend backend = parse_backend(c.backend);
  const auto run = [&](std::uint64_t seed, unsigned mode) {
    return c.target == "pq" ? run_pq_sequence(c.capacity, c.ops, seed, backend, mode)
                            : run_oram_sequence(c.capacity, c.ops, seed, backend, mode);
  };
  // Sequence s_i comes from seed + i; pair i compares s_i with s_(i+1).
  ProbeTrace previous = run(c.seed, kDigest);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < c.pairs; ++i) {
    ProbeTrace next = run(c.seed + i + 1, kDigest);
    const bool same = previous.same_as(next);
    out << "pair " << i << ' ' << to_hex(previous.digest) << ' ' << to_hex(next.digest) << ' '
        << (same ? "match" : "MISMATCH") << '\n';
    if (!same) {
      if (mismatches == 0) {
        report_divergence(std::cerr, run(c.seed + i, kDigest | kRetainEvents),
                          run(c.seed + i + 1, kDigest | kRetainEvents));
      }
      ++mismatches;
    }
    previous = std::move(next);
  }
  out << (mismatches == 0 ? "all pairs match" : std::to_string(mismatches) + " pairs differ")
      << '\n';
  return mismatches == 0 ? kOk : kFailed;
}

int fuzz_pq(const Config& c, std::ostream& out) {
  Memory memory(kCountOnly);
  ObliviousPriorityQueue q(memory, c.capacity, parse_backend(c.backend));
  reference::StableHeap heap;
  std::mt19937_64 rng(c.seed);
  const auto fail = [&](std::size_t t, const std::string& what) {
    std::cerr << "fuzz pq failed: seed " << c.seed << " op " << t << ": " << what << '\n';
    return kFailed;
  };
  const auto agrees = [](const Element& e, const std::optional<reference::HeapEntry>& r) {
    return r ? (!e.is_dummy() && e.key == r->key && e.priority == r->priority) : e.is_dummy();
  };
  for (std::size_t t = 0; t < c.ops; ++t) {
    const Word key = rng() >> 1;
    const Word priority = rng() % 64;  // small range: many ties
    const bool full = q.size() == c.capacity;
    switch (rng() % 6) {
      case 0:
        if (full) break;
        q.insert(key, priority);
        heap.insert(key, priority);
        break;
      case 1:
        if (!agrees(q.delete_min(), heap.pop())) return fail(t, "delete_min differs from heap");
        break;
      case 2:
        if (!agrees(q.min(), heap.min())) return fail(t, "min differs from heap");
        continue;  // plain min leaves the structure untouched
      case 3:
        if (!agrees(q.access(AccessKind::Min), heap.min())) return fail(t, "access(Min)");
        break;
      case 4: {
        if (full) break;
        heap.insert(key, priority);
        if (!agrees(q.access(AccessKind::InsertAndMin, key, priority), heap.min())) {
          return fail(t, "access(InsertAndMin)");
        }
        break;
      }
      default:
        if (!agrees(q.access(AccessKind::DeleteMinAndMin), heap.pop())) {
          return fail(t, "access(DeleteMinAndMin)");
        }
        break;
    }
    if (auto violation = reference::check_level_invariants(q, heap.sorted())) {
      return fail(t, *violation);
    }
    if (auto ts = reference::max_timestamp(q); ts && *ts >= 2 * c.capacity) {
      return fail(t, "timestamp " + std::to_string(*ts) + " exceeds 2N");
    }
  }
  out << "fuzz pq: " << c.ops << " ops, no mismatches\n";
  return kOk;
}

int fuzz_oram(const Config& c, std::ostream& out) {
  std::mt19937_64 rng(c.seed);
  const auto requests = random_oram_stream(c.capacity, c.ops, rng);
  OramRunOptions options;
  options.backend = parse_backend(c.backend);
  if (c.corrupt_annotation) {
    // Shift one next-access annotation a step early. An immediate repeat
    // (tau_t = t + 1) makes the shifted cell overdue at the very next access.
    options.tamper = [](std::vector<Word>& tau) {
      for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] == i + 2) {
          --tau[i];
          return;
        }
      }
      for (auto& v : tau) {
        if (v <= tau.size()) {
          --v;
          return;
        }
      }
    };
  }
  Memory memory(kCountOnly);
  std::vector<Word> reads;
  try {
    reads = run_oram(memory, requests, c.capacity, options);
  } catch (const AnnotationError& e) {
    std::cerr << "fuzz oram failed: seed " << c.seed << ": " << e.what() << '\n';
    return kFailed;
  }
  reference::ShadowArray shadow(c.capacity, options.default_value);
  std::size_t r = 0;
  for (std::size_t t = 0; t < requests.size(); ++t) {
    const auto& q = requests[t];
    if (q.op == OramOp::Write) {
      shadow.write(q.index, q.value);
      continue;
    }
    if (reads.at(r++) != shadow.read(q.index)) {
      std::cerr << "fuzz oram failed: seed " << c.seed << " op " << t << ": read mismatch\n";
      return kFailed;
    }
  }
  out << "fuzz oram: " << c.ops << " ops, no mismatches\n";
  return kOk;
}

int fuzz_select(const Config& c, std::ostream& out) {
  std::mt19937_64 rng(c.seed);
  const Backend backend = parse_backend(c.backend);
  for (std::size_t t = 0; t < c.ops; ++t) {
    const std::size_t n = 1 + rng() % std::max<std::size_t>(c.capacity, 1);
    std::vector<Element> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = Element::real(i, rng() % 50, i);
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end(), element_less);
    const std::size_t k = rng() % n;
    Memory memory(kCountOnly);
    const ElementSpan a = ElementSpan::allocate(memory, n);
    for (std::size_t i = 0; i < n; ++i) a.store(i, values[i]);
    if (!(k_element(a, k, backend) == sorted[k])) {
      std::cerr << "fuzz select failed: seed " << c.seed << " op " << t << ": k_element n=" << n
                << " k=" << k << '\n';
      return kFailed;
    }
  }
  out << "fuzz select: " << c.ops << " arrays, no mismatches\n";
  return kOk;
}

int cmd_fuzz(const Config& c, std::ostream& out) {
  if (c.target == "pq") return fuzz_pq(c, out);
  if (c.target == "oram") return fuzz_oram(c, out);
  return fuzz_select(c, out);
}

int cmd_bench(const Config& c, std::ostream& out) {
  const Backend backend = parse_backend(c.backend);
  out << "target,N,ops,total_probes,probes_per_op,peak_cells\n";
  for (unsigned lg = c.min_log; lg <= c.max_log; ++lg) {
    const std::size_t n = std::size_t{1} << lg;
    Memory memory(kCountOnly);
    std::mt19937_64 rng(c.seed);
    std::uint64_t ops = 0;
    std::uint64_t probes = 0;
    if (c.target == "pq") {
      ObliviousPriorityQueue q(memory, n, backend);
      // One full period of the top level, so every level's rebuilds are
      // counted exactly in proportion.
      ops = std::size_t{1} << (q.levels() - 1);
      const std::uint64_t before = memory.recorder().count();
      for (std::uint64_t t = 0; t < ops; ++t) {
        const auto kind = q.size() < n && rng() % 2 ? AccessKind::InsertAndMin
                                                     : AccessKind::DeleteMinAndMin;
        q.access(kind, t, rng() % 1000);
      }
      probes = memory.recorder().count() - before;
    } else {
      ops = 2 * n;
      run_oram(memory, random_oram_stream(n, ops, rng), n, OramRunOptions{0, backend});
      probes = memory.recorder().count();
    }
    out << c.target << ',' << n << ',' << ops << ',' << probes << ','
        << static_cast<double>(probes) / static_cast<double>(ops) << ',' << memory.peak_words()
        << '\n';
  }
  return kOk;
}

std::vector<ReplacementPolicy> parse_policies(const std::string& name) {
  if (name == "lru") return {ReplacementPolicy::Lru};
  if (name == "belady") return {ReplacementPolicy::BeladyOffline};
  return {ReplacementPolicy::BeladyOffline, ReplacementPolicy::Lru};
}

int cmd_iosim(const Config& c, std::ostream& out) {
  write_io_csv_header(out);
  const auto policies = parse_policies(c.policy);
  const bool partition = c.algo.rfind("partition", 0) == 0;
  const bool aware = c.algo.find("aware") != std::string::npos;
  for (const std::size_t n : c.sizes) {
    for (const std::size_t b : c.blocks) {
      if (partition) {
        // One partition run per block size (the cache-aware algorithm depends
        // on B); its trace is replayed for every M and policy.
        Memory memory(kCountOnly, 256);
        const ElementSpan a = ElementSpan::allocate(memory, n);
        std::mt19937_64 rng(c.seed);
        for (std::size_t i = 0; i < n; ++i) a.store(i, Element::real(i, rng() % 2, i));
        const Predicate p = [](const Element& e) { return e.priority != 0; };
        BlockTrace trace(b);
        memory.recorder().add_observer(&trace);
        if (aware) {
          cache_aware_partition(a, p, IoModel{b * 4, b, ReplacementPolicy::ExplicitCacheAware});
        } else {
          cache_agnostic_partition(a, p, c.epsilon);
        }
        memory.recorder().remove_observer(&trace);
        for (const std::size_t m : c.memories) {
          if (m < b) continue;
          for (const auto policy : policies) {
            const MissCount misses = simulate_blocks(trace, m / b, policy);
            IoStats s{aware ? "partition-aware" : "partition-agnostic", n, m, b, policy,
                      misses.total, misses.phases};
            write_io_csv(out, s);
          }
        }
      } else {
        for (const std::size_t m : c.memories) {
          if (m < b) continue;
          const std::size_t ops = [&] {
            std::size_t l = 1;
            while ((std::size_t{1} << l) < n) ++l;
            return std::size_t{1} << (l - 1);
          }();
          const PqIoResult r =
              pq_io_experiment(n, ops, m, b,
                               aware ? ExternalBackend::CacheAware : ExternalBackend::CacheAgnostic,
                               c.seed);
          write_io_csv(out, r.stats);
        }
      }
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oblivious priority queue and offline ORAM toolkit"};
  app.require_subcommand(1);
  Config c;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "Write output to this file instead of stdout");
    sub->add_option("--backend", c.backend,
                    "Partition backend: compaction|oblivious|sort|cache-aware|cache-agnostic|naive");
  };

  auto* verify = app.add_subcommand("verify-trace", "Compare trace digests of random sequences");
  verify->add_option("--target", c.target)->check(CLI::IsMember({"pq", "oram"}));
  verify->add_option("--capacity", c.capacity)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  verify->add_option("--ops", c.ops);
  verify->add_option("--pairs", c.pairs);
  verify->add_option("--seed", c.seed);
  common(verify);

  auto* fuzz = app.add_subcommand("fuzz", "Check against reference oracles");
  fuzz->add_option("--target", c.target)->check(CLI::IsMember({"pq", "oram", "select"}));
  fuzz->add_option("--capacity", c.capacity)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  fuzz->add_option("--ops", c.ops);
  fuzz->add_option("--seed", c.seed)->required();
  fuzz->add_flag("--inject-corrupt-annotation", c.corrupt_annotation,
                 "Shift one next-access annotation early (ORAM only)");
  common(fuzz);

  auto* bench = app.add_subcommand("bench", "Probe counts per operation over a capacity grid");
  bench->add_option("--target", c.target)->check(CLI::IsMember({"pq", "oram"}));
  bench->add_option("--min-log", c.min_log, "Smallest capacity exponent")->check(CLI::Range(1, 24));
  bench->add_option("--max-log", c.max_log, "Largest capacity exponent")->check(CLI::Range(1, 24));
  bench->add_option("--seed", c.seed);
  common(bench);

  auto* iosim = app.add_subcommand("iosim", "Block-transfer counts under a cache model");
  iosim->add_option("--algo", c.algo)
      ->check(CLI::IsMember({"partition-aware", "partition-agnostic", "pq-aware", "pq-agnostic"}));
  iosim->add_option("--n", c.sizes, "Input sizes (elements) or PQ capacities");
  iosim->add_option("-M,--memory", c.memories, "Internal memory sizes in words");
  iosim->add_option("-B,--block", c.blocks, "Block sizes in words");
  iosim->add_option("--policy", c.policy)->check(CLI::IsMember({"lru", "belady", "both"}));
  iosim->add_option("--epsilon", c.epsilon)->check(CLI::PositiveNumber);
  iosim->add_option("--seed", c.seed);
  common(iosim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (c.min_log > c.max_log) {
    std::cerr << "--min-log must not exceed --max-log\n";
    return kUsage;
  }

  std::ofstream file;
  if (!c.out.empty()) {
    file.open(c.out);
    if (!file) {
      std::cerr << "cannot open " << c.out << '\n';
      return kUsage;
    }
  }
  std::ostream& out = c.out.empty() ? std::cout : file;

  try {
    if (verify->parsed()) return cmd_verify_trace(c, out);
    if (fuzz->parsed()) return cmd_fuzz(c, out);
    if (bench->parsed()) return cmd_bench(c, out);
    return cmd_iosim(c, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
}
