#pragma once

// Genetic algorithm over mesh networks: elitism, entrywise breeding,
// masked Gaussian mutation, diversity carry-over, and fresh random fill.
// Every random draw comes from a stream derived from (run seed, generation,
// slot), so results do not depend on evaluation order or thread count.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "mnn/dataset.hpp"
#include "mnn/error.hpp"
#include "mnn/format.hpp"
#include "mnn/mesh.hpp"
#include "mnn/rng.hpp"
#include "mnn/topology.hpp"

namespace mnn {

struct EvolutionConfig {
    std::uint32_t population_size = 50;
    std::uint32_t elite_count = 10;
    std::uint32_t breed_count = 20;
    std::uint32_t diversity_count = 10;
    std::uint32_t mutation_count = 40;  // expected mutated entries per child
    double mutation_std = 1.0;
    std::uint32_t generations = 100;
    double random_std = 0.2;
    std::array<double, kBlockCount> polarity{0.5, 0.5, 0.5, 0.5, 0.5};
    std::uint64_t rng_seed = 1;
    unsigned threads = 1;

    void validate() const {
        detail::require(population_size >= 1, "population_size must be >= 1");
        detail::require(std::uint64_t{elite_count} + breed_count + diversity_count <= population_size,
                        "elite_count + breed_count + diversity_count exceeds population_size");
        detail::require(breed_count == 0 || elite_count >= 1, "breeding needs at least one elite");
        detail::require(mutation_std > 0 && std::isfinite(mutation_std), "mutation_std must be > 0");
        detail::require(random_std > 0 && std::isfinite(random_std), "random_std must be > 0");
        for (double p : polarity) detail::require(p >= 0 && p <= 1, "polarity probabilities must lie in [0, 1]");
    }
};

struct Individual {
    MeshNetwork network;
    StructureMask mask;
    std::optional<double> fitness;
};

using Population = std::vector<Individual>;
using FitnessFn = std::function<double(const MeshNetwork&)>;

/// How fresh random individuals are produced. With `confine` set, weights
/// outside the mask are zeroed and the individual carries that mask; this
/// keeps rigid runs on the seed's support.
struct FreshSource {
    MeshDims dims;
    std::optional<StructureMask> confine;

    Individual make(const EvolutionConfig& cfg, Rng& rng) const {
        MeshNetwork net = random_mesh(dims, cfg.polarity, cfg.random_std, rng);
        if (!confine) return {std::move(net), StructureMask::all(dims), std::nullopt};
        auto blocks = net.blocks();
        for (std::size_t k = 0; k < kBlockCount; ++k) {
            const auto allowed = confine->flat(k);
            for (std::size_t i = 0; i < blocks[k].size(); ++i)
                if (!allowed[i]) blocks[k][i] = 0.0;
        }
        return {std::move(net), *confine, std::nullopt};
    }
};

/// Classification accuracy of a network on a fixed labeled set.
class AccuracyFitness {
public:
    explicit AccuracyFitness(const Dataset& data) : inputs_(data.inputs()), labels_(data.labels()) {
        if (data.empty()) throw InvalidArgument("fitness dataset is empty");
    }

    double operator()(const MeshNetwork& net) const {
        const Matrix scores = forward_batch(net, inputs_);
        std::size_t hits = 0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j)
            if (label_from_scores(scores.col(j)) == labels_[static_cast<std::size_t>(j)]) ++hits;
        return static_cast<double>(hits) / static_cast<double>(labels_.size());
    }

private:
    Matrix inputs_;
    std::vector<Label> labels_;
};

// ---------------------------------------------------------------------------
// Operators

/// Seeds first, then fresh random individuals up to population_size.
inline Population init_population(const std::vector<Seed>& seeds, const EvolutionConfig& cfg,
                                  const FreshSource& fresh) {
    cfg.validate();
    if (seeds.size() > cfg.population_size) throw InvalidArgument("more seeds than population_size");
    Population pop;
    pop.reserve(cfg.population_size);
    for (const auto& s : seeds) {
        s.network.validate();
        detail::require(s.network.dims() == fresh.dims, "seed dimensions differ from the run dimensions");
        detail::require(s.mask.congruent_to(s.network), "seed mask is not congruent to its network");
        pop.push_back({s.network, s.mask, std::nullopt});
    }
    for (std::size_t i = pop.size(); i < cfg.population_size; ++i) {
        Rng rng = make_rng(cfg.rng_seed, {0xF5E5ULL, i});
        pop.push_back(fresh.make(cfg, rng));
    }
    return pop;
}

/// Entrywise crossover: each entry comes from mother or father with
/// probability 1/2. Masks combine by OR.
inline Individual breed(const Individual& mother, const Individual& father, Rng& rng) {
    detail::require(mother.network.dims() == father.network.dims(), "parents have different dimensions");
    Individual child{mother.network, mother.mask | father.mask, std::nullopt};
    auto out = child.network.blocks();
    const auto dad = father.network.blocks();
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t k = 0; k < kBlockCount; ++k)
        for (std::size_t i = 0; i < out[k].size(); ++i) {
            if (left == 0) {
                bits = rng();
                left = 64;
            }
            if (bits & 1U) out[k][i] = dad[k][i];
            bits >>= 1;
            --left;
        }
    return child;
}

/// Adds N(0, sigma) to a Bernoulli(p_m) selection of mask-true entries, a
/// fresh selection per block, with p_m = k / evolvable so the expected number
/// of touched entries is k. Returns the number of entries touched.
inline std::size_t mutate_in_place(Individual& ind, std::uint32_t k, double sigma, Rng& rng) {
    detail::require(sigma > 0 && std::isfinite(sigma), "mutation sigma must be > 0");
    ind.fitness.reset();
    const std::size_t evolvable = ind.mask.evolvable_count();
    if (k == 0 || evolvable == 0) return 0;
    const double p = std::min(1.0, static_cast<double>(k) / static_cast<double>(evolvable));
    std::normal_distribution<double> noise(0.0, sigma);
    std::optional<std::geometric_distribution<std::uint64_t>> gap;
    if (p < 1.0) gap.emplace(p);

    std::size_t touched = 0;
    auto blocks = ind.network.blocks();
    for (std::size_t b = 0; b < kBlockCount; ++b) {
        const auto allowed = ind.mask.flat(b);
        // Skip counts over evolvable entries are geometric, which is the
        // same law as an independent Bernoulli(p) draw per entry.
        std::uint64_t skip = gap ? (*gap)(rng) : 0;
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            if (!allowed[i]) continue;
            if (skip > 0) {
                --skip;
                continue;
            }
            blocks[b][i] += noise(rng);
            ++touched;
            skip = gap ? (*gap)(rng) : 0;
        }
    }
    return touched;
}

inline Individual mutate(Individual ind, std::uint32_t k, double sigma, Rng& rng) {
    mutate_in_place(ind, k, sigma, rng);
    return ind;
}

/// Evaluates every individual without a fitness, splitting the work over
/// `threads` workers.
inline void evaluate(Population& pop, const FitnessFn& fitness, unsigned threads = 1) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (!pop[i].fitness) todo.push_back(i);
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t j = begin; j < todo.size(); j += stride) {
            const double f = fitness(pop[todo[j]].network);
            if (!(f >= 0.0 && f <= 1.0)) throw NumericError("fitness outside [0, 1]");
            pop[todo[j]].fitness = f;
        }
    };
    const unsigned n = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(todo.size())));
    if (n <= 1) {
        work(0, 1);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back([&, t] {
                try {
                    work(t, n);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Indices sorted by fitness, best first; ties keep population order.
inline std::vector<std::size_t> rank_by_fitness(const Population& pop) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pop[a].fitness.value_or(-1.0) > pop[b].fitness.value_or(-1.0);
    });
    return order;
}

/// One generation: evaluate, keep elites unchanged, breed+mutate children
/// from elite pairs, carry a diversity sample from the part of the
/// population ranked at or below the 90th percentile, then fill with fresh
/// random individuals.
inline Population step_generation(Population pop, const FitnessFn& fitness, const EvolutionConfig& cfg,
                                  const FreshSource& fresh, std::uint64_t generation) {
    cfg.validate();
    if (pop.empty()) throw InvalidArgument("population is empty");
    evaluate(pop, fitness, cfg.threads);
    const auto order = rank_by_fitness(pop);

    Population next;
    next.reserve(cfg.population_size);
    const std::size_t elites = std::min<std::size_t>(cfg.elite_count, pop.size());
    for (std::size_t r = 0; r < elites; ++r) next.push_back(pop[order[r]]);

    for (std::uint32_t c = 0; c < cfg.breed_count && elites > 0; ++c) {
        Rng rng = make_rng(cfg.rng_seed, {generation, 0xB4EEDULL, c});
        std::size_t mother = 0, father = 0;
        if (elites >= 2) {
            std::uniform_int_distribution<std::size_t> pick(0, elites - 1);
            mother = pick(rng);
            do father = pick(rng);
            while (father == mother);
        }
        Individual child = breed(next[mother], next[father], rng);
        mutate_in_place(child, cfg.mutation_count, cfg.mutation_std, rng);
        next.push_back(std::move(child));
    }

    // Diversity pool: ranks below the elites and outside the top decile.
    const auto top_decile = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(pop.size())));
    const std::size_t pool_begin = std::max(elites, top_decile);
    if (pool_begin < order.size() && cfg.diversity_count > 0) {
        std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(pool_begin), order.end());
        std::vector<std::size_t> chosen;
        Rng rng = make_rng(cfg.rng_seed, {generation, 0xD1BEULL});
        std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), cfg.diversity_count, rng);
        for (auto i : chosen) next.push_back(pop[i]);
    }

    for (std::size_t i = next.size(); i < cfg.population_size; ++i) {
        Rng rng = make_rng(cfg.rng_seed, {generation, 0xF5E5ULL, i});
        next.push_back(fresh.make(cfg, rng));
    }
    return next;
}

// ---------------------------------------------------------------------------
// Runs

/// 64-bit fingerprint of a network's weights.
inline std::uint64_t fingerprint(const MeshNetwork& net) {
    std::uint64_t h = splitmix64(net.settle_steps);
    for (auto b : net.blocks())
        for (double v : b) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

struct GenerationRecord {
    std::uint32_t generation;
    double best;
    double mean;
    std::vector<std::uint64_t> elite_fingerprints;
};

struct EvolutionTrace {
    std::vector<GenerationRecord> records;
};

struct EvolutionResult {
    Individual best;
    EvolutionTrace trace;
};

/// Runs `generations` steps from the seeded population. The trace holds one
/// record per evaluated generation (0..generations); the best individual is
/// the best of the final population, which elitism makes the best ever seen.
inline EvolutionResult evolve(const std::vector<Seed>& seeds, const EvolutionConfig& cfg, const FitnessFn& fitness,
                              const FreshSource& fresh) {
    Population pop = init_population(seeds, cfg, fresh);
    EvolutionResult result;
    for (std::uint32_t g = 0;; ++g) {
        evaluate(pop, fitness, cfg.threads);
        const auto order = rank_by_fitness(pop);
        GenerationRecord rec{g, *pop[order.front()].fitness, 0.0, {}};
        for (const auto& ind : pop) rec.mean += *ind.fitness;
        rec.mean /= static_cast<double>(pop.size());
        for (std::size_t r = 0; r < std::min<std::size_t>(cfg.elite_count, order.size()); ++r)
            rec.elite_fingerprints.push_back(fingerprint(pop[order[r]].network));
        result.trace.records.push_back(std::move(rec));
        if (g == cfg.generations) {
            result.best = pop[order.front()];
            break;
        }
        pop = step_generation(std::move(pop), fitness, cfg, fresh, g + 1);
    }
    return result;
}

/// Fitness is accuracy on `val`.
inline EvolutionResult evolve(const std::vector<Seed>& seeds, const EvolutionConfig& cfg, const Dataset& val,
                              const FreshSource& fresh) {
    if (val.empty()) throw InvalidArgument("validation set is empty");
    const AccuracyFitness acc(val);
    return evolve(seeds, cfg, FitnessFn(std::cref(acc)), fresh);
}

inline void write_trace_csv(std::ostream& out, const EvolutionTrace& trace) {
    out << "generation,best,mean\n";
    for (const auto& r : trace.records)
        out << r.generation << ',' << format_real(r.best) << ',' << format_real(r.mean) << '\n';
}

// ---------------------------------------------------------------------------
// Hyperparameter sweep

struct SweepGrid {
    std::vector<std::uint32_t> mutation_counts;
    std::vector<double> mutation_stds;
    std::vector<std::uint32_t> generations;
    std::vector<double> random_stds;

    /// 10 x 5 x 3 x 5 = 750 configurations.
    static SweepGrid full() {
        return {{10, 20, 30, 40, 50, 60, 70, 80, 90, 100},
                {0.2, 0.4, 0.6, 0.8, 1.0},
                {100, 500, 1000},
                {0.2, 0.4, 0.6, 0.8, 1.0}};
    }

    std::size_t size() const {
        return mutation_counts.size() * mutation_stds.size() * generations.size() * random_stds.size();
    }

    /// Every combination applied to `base`, mutation count varying slowest.
    std::vector<EvolutionConfig> expand(const EvolutionConfig& base) const {
        std::vector<EvolutionConfig> out;
        out.reserve(size());
        for (auto k : mutation_counts)
            for (auto sm : mutation_stds)
                for (auto g : generations)
                    for (auto sr : random_stds) {
                        EvolutionConfig c = base;
                        c.mutation_count = k;
                        c.mutation_std = sm;
                        c.generations = g;
                        c.random_std = sr;
                        out.push_back(c);
                    }
        return out;
    }
};

struct SweepRecord {
    std::uint32_t mutation_count;
    double sigma_mut;
    std::uint32_t generations;
    double sigma_rand;
    double best_accuracy;
    double seconds;
};

/// Runs one evolution per grid configuration. `on_record` (optional) sees
/// each record as soon as it is produced.
inline std::vector<SweepRecord> sweep(const SweepGrid& grid, const EvolutionConfig& base,
                                      const std::vector<Seed>& seeds, const Dataset& val, const FreshSource& fresh,
                                      const std::function<void(const SweepRecord&)>& on_record = {}) {
    if (grid.size() == 0) throw InvalidArgument("sweep grid is empty");
    if (val.empty()) throw InvalidArgument("validation set is empty");
    const AccuracyFitness acc(val);
    std::vector<SweepRecord> records;
    for (const auto& cfg : grid.expand(base)) {
        const auto start = std::chrono::steady_clock::now();
        const EvolutionResult r = evolve(seeds, cfg, FitnessFn(std::cref(acc)), fresh);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        records.push_back({cfg.mutation_count, cfg.mutation_std, cfg.generations, cfg.random_std,
                           *r.best.fitness, elapsed.count()});
        if (on_record) on_record(records.back());
    }
    return records;
}

inline void write_sweep_header(std::ostream& out) {
    out << "mutation_count,sigma_mut,generations,sigma_rand,best_accuracy,seconds\n";
}

/// With `record_time` false the seconds column is written as 0 so the file
/// is reproducible byte for byte.
inline void write_sweep_row(std::ostream& out, const SweepRecord& r, bool record_time = true) {
    out << r.mutation_count << ',' << format_real(r.sigma_mut) << ',' << r.generations << ','
        << format_real(r.sigma_rand) << ',' << format_real(r.best_accuracy) << ','
        << (record_time ? format_fixed(r.seconds, 3) : std::string("0")) << '\n';
}

} // namespace mnn
