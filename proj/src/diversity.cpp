#include "promptsteer/diversity.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <unordered_map>

#include "promptsteer/errors.hpp"
#include "promptsteer/steerability.hpp"

namespace promptsteer {

namespace {

// user -> prompts in submission order
using UserPrompts = std::map<std::string, std::vector<const PromptObservation*>>;
using TargetIndex = std::map<std::string, UserPrompts>;

TargetIndex index_by_target(std::span<const PromptObservation> obs) {
  TargetIndex idx;
  for (const auto& o : obs) idx[o.target_id][o.user_id].push_back(&o);
  for (auto& [_, users] : idx) {
    for (auto& [_, ps] : users) {
      std::stable_sort(ps.begin(), ps.end(), [](auto* a, auto* b) { return a->ordinal < b->ordinal; });
    }
  }
  return idx;
}

std::vector<EmbeddingVector> embeddings_of(const std::vector<const PromptObservation*>& ps) {
  std::vector<EmbeddingVector> out;
  out.reserve(ps.size());
  for (auto* p : ps) out.push_back(p->embedding);
  return out;
}

EmbeddingVector target_mean(const UserPrompts& users) {
  std::vector<EmbeddingVector> all;
  for (const auto& [_, ps] : users) {
    for (auto* p : ps) all.push_back(p->embedding);
  }
  return centroid(all);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  // rejection sampling keeps the draw exactly uniform
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

constexpr std::uint64_t kStyleStream = 0x5354594c45ULL;

}  // namespace

std::vector<PromptObservation> embed_prompts(std::span<const DatasetRecord> records,
                                             EmbeddingProvider& embedder) {
  std::unordered_map<std::string, EmbeddingVector> cache;
  std::vector<PromptObservation> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = cache.find(r.positive_prompt);
    if (it == cache.end()) it = cache.emplace(r.positive_prompt, embedder.embed_text(r.positive_prompt)).first;
    out.push_back({r.user_id, r.target_id, r.ordinal, it->second, r.score});
  }
  return out;
}

FirstLastReport diversity_first_last(std::span<const PromptObservation> obs) {
  FirstLastReport report;
  double first_sum = 0.0;
  double last_sum = 0.0;
  for (const auto& [target, users] : index_by_target(obs)) {
    const EmbeddingVector mu = target_mean(users);
    for (const auto& [user, ps] : users) {
      FirstLastEntry e;
      e.user_id = user;
      e.target_id = target;
      e.n_prompts = ps.size();
      e.first_distance = euclidean_distance(ps.front()->embedding, mu);
      e.last_distance = euclidean_distance(ps.back()->embedding, mu);
      e.first_score = ps.front()->score;
      e.last_score = ps.back()->score;
      first_sum += e.first_score;
      last_sum += e.last_score;
      report.entries.push_back(std::move(e));
    }
  }
  if (!report.entries.empty()) {
    const double n = static_cast<double>(report.entries.size());
    report.mean_first_score = first_sum / n;
    report.mean_last_score = last_sum / n;
  }
  return report;
}

std::vector<UserDispersion> user_dispersions(std::span<const PromptObservation> obs) {
  std::vector<UserDispersion> out;
  for (const auto& [target, users] : index_by_target(obs)) {
    for (const auto& [user, ps] : users) {
      out.push_back({user, target, ps.size(), dispersion(embeddings_of(ps))});
    }
  }
  return out;
}

std::vector<UserDispersion> permuted_user_baseline(std::span<const PromptObservation> obs,
                                                   std::uint64_t seed, std::size_t permutations) {
  if (permutations == 0) throw DomainError("permutations must be >= 1");
  std::vector<UserDispersion> out;
  for (const auto& [target, users] : index_by_target(obs)) {
    if (users.size() < 2) continue;
    std::vector<const EmbeddingVector*> pool;
    for (const auto& [_, ps] : users) {
      for (auto* p : ps) pool.push_back(&p->embedding);
    }
    std::mt19937_64 rng(target_seed(seed, target));
    std::vector<EmbeddingVector> draw;
    for (const auto& [user, ps] : users) {
      double total = 0.0;
      for (std::size_t k = 0; k < permutations; ++k) {
        draw.clear();
        for (std::size_t i = 0; i < ps.size(); ++i) draw.push_back(*pool[uniform_index(rng, pool.size())]);
        total += dispersion(draw);
      }
      out.push_back({user, target, ps.size(), total / static_cast<double>(permutations)});
    }
  }
  return out;
}

StyleReport user_style_vectors(std::span<const PromptObservation> obs, std::uint64_t seed,
                               std::size_t permutations) {
  if (permutations == 0) throw DomainError("permutations must be >= 1");
  // target -> list of (user, style vector); user -> list of (target, style vector)
  std::map<std::string, std::vector<EmbeddingVector>> by_target;
  std::map<std::string, std::vector<std::pair<std::string, EmbeddingVector>>> by_user;
  for (const auto& [target, users] : index_by_target(obs)) {
    const EmbeddingVector mu = target_mean(users);
    for (const auto& [user, ps] : users) {
      EmbeddingVector style = centroid(embeddings_of(ps)) - mu;
      by_target[target].push_back(style);
      by_user[user].emplace_back(target, std::move(style));
    }
  }

  StyleReport report;
  for (const auto& [user, styles] : by_user) {
    if (styles.size() < 2) continue;
    std::vector<EmbeddingVector> real;
    double norm_sum = 0.0;
    for (const auto& [_, s] : styles) {
      real.push_back(s);
      norm_sum += s.norm();
    }
    const auto n_targets = styles.size();
    report.real.push_back({user, n_targets, dispersion(real), norm_sum / static_cast<double>(n_targets)});

    std::mt19937_64 rng(target_seed(seed ^ kStyleStream, user));
    double disp_total = 0.0;
    double norm_total = 0.0;
    std::vector<EmbeddingVector> sim;
    for (std::size_t k = 0; k < permutations; ++k) {
      sim.clear();
      for (const auto& [target, _] : styles) {
        const auto& pool = by_target.at(target);
        sim.push_back(pool[uniform_index(rng, pool.size())]);
        norm_total += sim.back().norm();
      }
      disp_total += dispersion(sim);
    }
    const double reps = static_cast<double>(permutations);
    report.baseline.push_back(
        {user, n_targets, disp_total / reps, norm_total / (reps * static_cast<double>(n_targets))});
  }
  return report;
}

std::optional<SuccessRates> adjacent_success_rate(std::span<const std::vector<double>> sequences) {
  std::size_t up = 0, same = 0, down = 0;
  for (const auto& seq : sequences) {
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const double delta = seq[i] - seq[i - 1];
      if (delta >= 1.0) {
        ++up;
      } else if (delta <= -1.0) {
        ++down;
      } else {
        ++same;
      }
    }
  }
  const std::size_t pairs = up + same + down;
  if (pairs == 0) return std::nullopt;
  const double n = static_cast<double>(pairs);
  return SuccessRates{static_cast<double>(up) / n, static_cast<double>(same) / n,
                      static_cast<double>(down) / n, pairs};
}

std::optional<SuccessRates> adjacent_success_rate(std::span<const Trajectory> trajectories) {
  std::vector<std::vector<double>> seqs;
  seqs.reserve(trajectories.size());
  for (const auto& t : trajectories) seqs.emplace_back(t.scores.begin(), t.scores.end());
  return adjacent_success_rate(seqs);
}

DiversityReport diversity_report(std::span<const PromptObservation> obs, std::uint64_t seed,
                                 std::size_t permutations) {
  DiversityReport report;
  report.first_last = diversity_first_last(obs);

  const auto baseline = permuted_user_baseline(obs, seed, permutations);
  std::map<std::pair<std::string, std::string>, double> base_by_key;
  for (const auto& b : baseline) base_by_key[{b.target_id, b.user_id}] = b.dispersion;
  for (const auto& r : user_dispersions(obs)) {
    if (r.n_prompts < 2) continue;
    auto it = base_by_key.find({r.target_id, r.user_id});
    if (it == base_by_key.end()) continue;
    report.real_dispersions.push_back(r);
    report.baseline_dispersions.push_back({r.user_id, r.target_id, r.n_prompts, it->second});
  }

  auto values = [](const auto& xs) {
    std::vector<double> v;
    for (const auto& x : xs) v.push_back(x.dispersion);
    return v;
  };
  try {
    if (report.real_dispersions.size() >= 2) {
      report.dispersion_test = welch_t_test(values(report.real_dispersions), values(report.baseline_dispersions));
    }
  } catch (const DomainError&) {
    report.dispersion_test.reset();
  }

  report.style = user_style_vectors(obs, seed, permutations);
  try {
    if (report.style.real.size() >= 2) {
      report.style_test = welch_t_test(values(report.style.real), values(report.style.baseline));
    }
  } catch (const DomainError&) {
    report.style_test.reset();
  }

  std::vector<std::vector<double>> seqs;
  for (const auto& [_, users] : index_by_target(obs)) {
    for (const auto& [_, ps] : users) {
      std::vector<double> s;
      for (auto* p : ps) s.push_back(p->score);
      seqs.push_back(std::move(s));
    }
  }
  report.success = adjacent_success_rate(seqs);
  return report;
}

}  // namespace promptsteer
