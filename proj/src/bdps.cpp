#include "isac/bdps.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/parallel.hpp"
#include "isac/rng.hpp"

namespace isac {

int SplitPlan::total_bits() const {
    int m = 0;
    for (const auto& g : groups) m += g.bits;
    return m;
}

void SplitPlan::validate(const ReducedInstance& inst) const {
    if (groups.empty()) throw InvalidInput("SplitPlan: no groups");
    std::vector<char> seen(inst.N, 0);
    double power = 0.0, eps2 = 0.0;
    for (const auto& g : groups) {
        if (g.dims.empty()) throw InvalidInput("SplitPlan: empty dimension group");
        if (g.bits < 0) throw InvalidInput("SplitPlan: negative bit load");
        if (g.power < 0.0 || g.eps < 0.0) throw InvalidInput("SplitPlan: negative budget");
        for (int d : g.dims) {
            if (d < 0 || d >= inst.N) throw InvalidInput("SplitPlan: dimension out of range");
            if (seen[d]++) throw InvalidInput("SplitPlan: dimension assigned twice");
        }
        power += g.power;
        eps2 += g.eps * g.eps;
    }
    for (int d = 0; d < inst.N; ++d)
        if (!seen[d]) throw InvalidInput("SplitPlan: dimension left unassigned");
    const int m = total_bits();
    const int M_expected = 1 << m;
    if (M_expected != inst.M) throw InvalidInput("SplitPlan: bit loads do not multiply to M");
    if (power > inst.P * (1.0 + 1e-9)) throw InvalidInput("SplitPlan: power shares exceed the budget");
    if (std::abs(eps2 - inst.eps * inst.eps) > 1e-9 * std::max(1.0, inst.eps * inst.eps))
        throw InvalidInput("SplitPlan: similarity shares do not compose to eps^2");
}

std::string SplitPlan::to_json() const {
    nlohmann::json j;
    j["groups"] = nlohmann::json::array();
    for (const auto& g : groups) {
        nlohmann::json jg;
        jg["dims"] = g.dims;
        jg["m"] = g.bits;
        jg["P"] = g.power;
        jg["eps"] = g.eps;
        j["groups"].push_back(jg);
    }
    return j.dump(2);
}

SplitPlan SplitPlan::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("SplitPlan: bad JSON: ") + e.what());
    }
    if (!j.contains("groups") || !j["groups"].is_array())
        throw InvalidInput("SplitPlan: missing groups array");
    SplitPlan plan;
    for (const auto& jg : j["groups"]) {
        SplitGroup g;
        g.dims = jg.at("dims").get<std::vector<int>>();
        g.bits = jg.at("m").get<int>();
        g.power = jg.at("P").get<double>();
        g.eps = jg.at("eps").get<double>();
        plan.groups.push_back(std::move(g));
    }
    return plan;
}

void GaConfig::validate() const {
    if (pop < 4) throw InvalidInput("GaConfig: population must be >= 4");
    if (iters < 1) throw InvalidInput("GaConfig: iterations must be >= 1");
    if (p_mut < 0.0 || p_mut > 1.0 || p_cross < 0.0 || p_cross > 1.0)
        throw InvalidInput("GaConfig: probabilities must lie in [0,1]");
    if (elitism < 0 || elitism >= pop) throw InvalidInput("GaConfig: bad elitism count");
    if (tournament < 1) throw InvalidInput("GaConfig: tournament size must be >= 1");
}

namespace {

// Sub-instance over the group's dimensions, gains sorted descending.
// order[i] is the original dimension behind sub-dimension i.
struct SubInstance {
    ReducedInstance inst;
    std::vector<int> order;
};

SubInstance make_sub_instance(const ReducedInstance& inst, const SplitGroup& g) {
    const Vec gains = inst.gains();
    SubInstance sub;
    sub.order = g.dims;
    std::stable_sort(sub.order.begin(), sub.order.end(),
                     [&](int a, int b) { return gains(a) > gains(b); });
    const int Ng = static_cast<int>(sub.order.size());
    sub.inst.M = 1 << g.bits;
    sub.inst.N = Ng;
    sub.inst.P = g.power;
    sub.inst.eps = g.eps;
    sub.inst.sigma = Vec(Ng);
    sub.inst.s0 = Vec(Ng);
    for (int i = 0; i < Ng; ++i) {
        sub.inst.sigma(i) = gains(sub.order[i]);
        sub.inst.s0(i) = inst.s0(sub.order[i]);
    }
    sub.inst.V = Mat::Identity(Ng, Ng);
    return sub;
}

DesignResult solve_group(const ReducedInstance& inst, const SplitGroup& g,
                         const AldaConfig& cfg, int group_index) {
    SubInstance sub = make_sub_instance(inst, g);
    if (g.bits == 0) {
        // Single deterministic signal: the reference restricted to the group.
        return make_design_result(sub.inst, {sub.inst.s0}, true);
    }
    try {
        return solve_maxmin(sub.inst, cfg).design;
    } catch (const NoFeasiblePoint& e) {
        InfeasibleDetected err(std::string("group subproblem infeasible: ") + e.what(), 0.0, 0.0, 0);
        err.group = group_index;
        throw err;
    } catch (InfeasibleDetected e) {
        e.group = group_index;
        throw e;
    }
}

}  // namespace

SplitResult solve_split(const ReducedInstance& inst, const SplitPlan& plan,
                        const AldaConfig& cfg, int n_threads) {
    plan.validate(inst);
    const int G = static_cast<int>(plan.groups.size());

    SplitResult out;
    out.per_group.resize(G);
    parallel_for(G, n_threads, [&](int g) {
        out.per_group[g] = solve_group(inst, plan.groups[g], cfg, g);
    });

    double sum_d2 = 0.0;
    for (const auto& r : out.per_group) sum_d2 += r.d_achieved * r.d_achieved;
    out.d_combined = std::sqrt(sum_d2);

    // Assemble the Cartesian product, group 0 most significant.
    std::vector<SubInstance> subs;
    subs.reserve(G);
    for (const auto& g : plan.groups) subs.push_back(make_sub_instance(inst, g));
    int M_total = 1;
    for (const auto& g : plan.groups) M_total *= (1 << g.bits);

    out.s_signals.reserve(M_total);
    for (int j = 0; j < M_total; ++j) {
        Vec s = Vec::Zero(inst.N);
        int rem = j;
        for (int g = G - 1; g >= 0; --g) {
            const int Mg = 1 << plan.groups[g].bits;
            const int digit = rem % Mg;
            rem /= Mg;
            const Vec& sg = out.per_group[g].s_signals[static_cast<std::size_t>(digit)];
            for (int i = 0; i < subs[g].inst.N; ++i) s(subs[g].order[i]) = sg(i);
        }
        out.s_signals.push_back(std::move(s));
    }

    const DesignResult assembled = make_design_result(inst, out.s_signals, true);
    out.d_true = assembled.d_achieved;
    out.signals = assembled.signals;
    return out;
}

namespace {

struct Chromosome {
    std::vector<int> bits;      // length G
    std::vector<double> pfrac;  // length G, slack power shares
    std::vector<double> efrac;  // length G, eps^2 shares
    std::vector<int> assign;    // length N, dimension -> group
};

std::string chrom_key(const Chromosome& c) {
    std::string key;
    key.reserve(c.bits.size() * 12 + c.assign.size() * 4);
    auto put = [&key](const void* p, std::size_t n) {
        key.append(static_cast<const char*>(p), n);
    };
    for (int b : c.bits) put(&b, sizeof b);
    for (double x : c.pfrac) put(&x, sizeof x);
    for (double x : c.efrac) put(&x, sizeof x);
    for (int a : c.assign) put(&a, sizeof a);
    return key;
}

class SplitSearch {
  public:
    SplitSearch(const ReducedInstance& inst, int G, const GaConfig& ga, const AldaConfig& cfg,
                int n_threads)
        : inst_(inst), G_(G), ga_(ga), cfg_(cfg), n_threads_(n_threads),
          gains_(inst.gains()), rng_(ga.seed, 0xB0D5) {
        m_ = 0;
        while ((1 << m_) < inst.M) ++m_;
        if ((1 << m_) != inst.M) throw InvalidInput("optimize_split: M must be a power of two");
        if (G < 1 || G > inst.N) throw InvalidInput("optimize_split: G must be in [1, N]");
        if (inst.M < G) throw InvalidInput("optimize_split: more groups than signals");
        gain_order_.resize(inst.N);
        std::iota(gain_order_.begin(), gain_order_.end(), 0);
        std::stable_sort(gain_order_.begin(), gain_order_.end(),
                         [&](int a, int b) { return gains_(a) > gains_(b); });
    }

    GaOutcome run();
    SplitPlan to_plan(const Chromosome& c) const;
    Chromosome seed_chromosome() const;

  private:
    void repair(Chromosome& c) const;
    Chromosome random_chromosome(Philox& rng) const;
    Chromosome crossover(const Chromosome& a, const Chromosome& b, Philox& rng) const;
    void mutate(Chromosome& c, Philox& rng) const;
    double group_gain_mass(const Chromosome& c, int g) const;

    const ReducedInstance& inst_;
    int G_;
    int m_ = 0;
    GaConfig ga_;
    AldaConfig cfg_;
    int n_threads_;
    Vec gains_;
    std::vector<int> gain_order_;
    Philox rng_;
};

double SplitSearch::group_gain_mass(const Chromosome& c, int g) const {
    double mass = 0.0;
    for (int d = 0; d < inst_.N; ++d)
        if (c.assign[d] == g) mass += gains_(d) * gains_(d);
    return mass;
}

void SplitSearch::repair(Chromosome& c) const {
    const int N = inst_.N;
    // Dimension assignment: clamp and make every group nonempty by stealing
    // the lowest-gain dimension from the currently largest group.
    std::vector<int> count(G_, 0);
    for (int d = 0; d < N; ++d) {
        if (c.assign[d] < 0 || c.assign[d] >= G_) c.assign[d] = 0;
        ++count[c.assign[d]];
    }
    for (int g = 0; g < G_; ++g) {
        while (count[g] == 0) {
            int donor = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
            int steal = -1;
            for (auto it = gain_order_.rbegin(); it != gain_order_.rend(); ++it)
                if (c.assign[*it] == donor) {
                    steal = *it;
                    break;
                }
            c.assign[steal] = g;
            --count[donor];
            ++count[g];
        }
    }

    // Bit loads: clamp into range, then rebalance to sum exactly m.
    int sum = 0;
    for (int g = 0; g < G_; ++g) {
        c.bits[g] = std::clamp(c.bits[g], 0, m_);
        sum += c.bits[g];
    }
    while (sum > m_) {
        int g = static_cast<int>(std::max_element(c.bits.begin(), c.bits.end()) - c.bits.begin());
        --c.bits[g];
        --sum;
    }
    while (sum < m_) {
        int best = 0;
        double best_mass = -1.0;
        for (int g = 0; g < G_; ++g) {
            const double mass = group_gain_mass(c, g);
            if (mass > best_mass) {
                best_mass = mass;
                best = g;
            }
        }
        ++c.bits[best];
        ++sum;
    }

    // Similarity shares on the simplex with a tiny floor.
    double esum = 0.0;
    for (double& e : c.efrac) {
        e = std::max(std::abs(e), 1e-6);
        esum += e;
    }
    for (double& e : c.efrac) e /= esum;

    // Power shares: zero-bit groups get exactly the power of their pinned
    // signal; active groups get their floor (cheapest ball point) plus a
    // share of the remaining budget.
    double psum = 0.0;
    for (double& p : c.pfrac) {
        p = std::max(std::abs(p), 1e-6);
        psum += p;
    }
    for (double& p : c.pfrac) p /= psum;
}

SplitPlan SplitSearch::to_plan(const Chromosome& c) const {
    SplitPlan plan;
    plan.groups.resize(G_);
    for (int g = 0; g < G_; ++g) plan.groups[g].bits = c.bits[g];
    for (int d = 0; d < inst_.N; ++d) plan.groups[c.assign[d]].dims.push_back(d);

    std::vector<double> v_norm2(G_, 0.0);
    for (int d = 0; d < inst_.N; ++d)
        v_norm2[c.assign[d]] += inst_.s0(d) * inst_.s0(d);

    const double eps2 = inst_.eps * inst_.eps;
    for (int g = 0; g < G_; ++g)
        plan.groups[g].eps = std::sqrt(eps2 * c.efrac[g]);

    std::vector<double> floor(G_, 0.0);
    double floor_sum = 0.0, active_frac = 0.0;
    for (int g = 0; g < G_; ++g) {
        const double vn = std::sqrt(v_norm2[g]);
        floor[g] = (plan.groups[g].bits == 0)
                       ? v_norm2[g]
                       : std::pow(std::max(0.0, vn - plan.groups[g].eps), 2);
        floor_sum += floor[g];
        if (plan.groups[g].bits > 0) active_frac += c.pfrac[g];
    }
    const double slack = std::max(0.0, inst_.P - floor_sum);
    for (int g = 0; g < G_; ++g) {
        double extra = 0.0;
        if (plan.groups[g].bits > 0 && active_frac > 0.0)
            extra = slack * c.pfrac[g] / active_frac;
        plan.groups[g].power = floor[g] + extra;
    }
    // Guard against rounding pushing the total over budget.
    double total = 0.0;
    for (const auto& g : plan.groups) total += g.power;
    if (total > inst_.P && total > 0.0)
        for (auto& g : plan.groups) g.power *= inst_.P / total;
    return plan;
}

Chromosome SplitSearch::seed_chromosome() const {
    Chromosome c;
    c.bits.assign(G_, 0);
    for (int i = 0; i < m_; ++i) ++c.bits[i % G_];
    c.pfrac.assign(G_, 1.0 / G_);
    c.efrac.assign(G_, 1.0 / G_);
    c.assign.assign(inst_.N, 0);
    for (int i = 0; i < inst_.N; ++i) c.assign[gain_order_[i]] = i % G_;
    repair(c);
    return c;
}

Chromosome SplitSearch::random_chromosome(Philox& rng) const {
    Chromosome c;
    c.bits.resize(G_);
    for (int g = 0; g < G_; ++g) c.bits[g] = static_cast<int>(rng.below(m_ + 1));
    c.pfrac.resize(G_);
    c.efrac.resize(G_);
    for (int g = 0; g < G_; ++g) c.pfrac[g] = rng.uniform_pos();
    for (int g = 0; g < G_; ++g) c.efrac[g] = rng.uniform_pos();
    c.assign.resize(inst_.N);
    for (int d = 0; d < inst_.N; ++d) c.assign[d] = static_cast<int>(rng.below(G_));
    repair(c);
    return c;
}

Chromosome SplitSearch::crossover(const Chromosome& a, const Chromosome& b, Philox& rng) const {
    Chromosome c = a;
    for (int g = 0; g < G_; ++g)
        if (rng.uniform() < 0.5) c.bits[g] = b.bits[g];
    const double alpha = rng.uniform();
    for (int g = 0; g < G_; ++g) {
        c.pfrac[g] = alpha * a.pfrac[g] + (1.0 - alpha) * b.pfrac[g];
        c.efrac[g] = alpha * a.efrac[g] + (1.0 - alpha) * b.efrac[g];
    }
    for (int d = 0; d < inst_.N; ++d)
        if (rng.uniform() < 0.5) c.assign[d] = b.assign[d];
    repair(c);
    return c;
}

void SplitSearch::mutate(Chromosome& c, Philox& rng) const {
    if (rng.uniform() < 0.5 && m_ > 0) {
        // move one bit between two groups
        const int from = static_cast<int>(rng.below(G_));
        const int to = static_cast<int>(rng.below(G_));
        if (c.bits[from] > 0) {
            --c.bits[from];
            ++c.bits[to];
        }
    }
    if (rng.uniform() < 0.5) {
        const int g = static_cast<int>(rng.below(G_));
        c.pfrac[g] *= std::exp(rng.uniform(-0.7, 0.7));
    }
    if (rng.uniform() < 0.5) {
        const int g = static_cast<int>(rng.below(G_));
        c.efrac[g] *= std::exp(rng.uniform(-0.7, 0.7));
    }
    if (rng.uniform() < 0.75) {
        const int d = static_cast<int>(rng.below(inst_.N));
        c.assign[d] = static_cast<int>(rng.below(G_));
    }
    repair(c);
}

GaOutcome SplitSearch::run() {
    std::vector<Chromosome> pop;
    pop.reserve(ga_.pop);
    pop.push_back(seed_chromosome());
    while (static_cast<int>(pop.size()) < ga_.pop) pop.push_back(random_chromosome(rng_));

    std::unordered_map<std::string, double> cache;
    std::mutex cache_mutex;

    auto evaluate = [&](const std::vector<Chromosome>& gen) {
        std::vector<double> fitness(gen.size());
        std::vector<int> missing;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            auto it = cache.find(chrom_key(gen[i]));
            if (it != cache.end()) fitness[i] = it->second;
            else missing.push_back(static_cast<int>(i));
        }
        parallel_for(static_cast<int>(missing.size()), n_threads_, [&](int j) {
            const int i = missing[static_cast<std::size_t>(j)];
            const SplitResult r = solve_split(inst_, to_plan(gen[static_cast<std::size_t>(i)]), cfg_, 1);
            fitness[static_cast<std::size_t>(i)] = r.d_combined;
            std::lock_guard<std::mutex> lock(cache_mutex);
            cache.emplace(chrom_key(gen[static_cast<std::size_t>(i)]), r.d_combined);
        });
        return fitness;
    };

    GaOutcome outcome;
    Chromosome best_chrom;
    double best_fit = -std::numeric_limits<double>::infinity();

    for (int gen = 0; gen < ga_.iters; ++gen) {
        const std::vector<double> fitness = evaluate(pop);

        std::vector<int> order(pop.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fitness[a] > fitness[b]; });

        if (fitness[order[0]] > best_fit) {
            best_fit = fitness[order[0]];
            best_chrom = pop[order[0]];
        }
        outcome.best_per_gen.push_back(best_fit);
        if (gen + 1 == ga_.iters) break;

        auto tournament = [&]() -> const Chromosome& {
            int winner = static_cast<int>(rng_.below(pop.size()));
            for (int t = 1; t < ga_.tournament; ++t) {
                const int cand = static_cast<int>(rng_.below(pop.size()));
                if (fitness[cand] > fitness[winner]) winner = cand;
            }
            return pop[winner];
        };

        std::vector<Chromosome> next;
        next.reserve(pop.size());
        for (int e = 0; e < ga_.elitism; ++e) next.push_back(pop[order[e]]);
        while (static_cast<int>(next.size()) < ga_.pop) {
            const Chromosome& p1 = tournament();
            const Chromosome& p2 = tournament();
            Chromosome child = (rng_.uniform() < ga_.p_cross) ? crossover(p1, p2, rng_) : p1;
            if (rng_.uniform() < ga_.p_mut) mutate(child, rng_);
            next.push_back(std::move(child));
        }
        pop = std::move(next);
    }

    outcome.plan = to_plan(best_chrom);
    outcome.result = solve_split(inst_, outcome.plan, cfg_, n_threads_);
    return outcome;
}

}  // namespace

SplitPlan default_plan(const ReducedInstance& inst, int G) {
    SplitSearch search(inst, G, GaConfig{}, AldaConfig{}, 1);
    return search.to_plan(search.seed_chromosome());
}

GaOutcome optimize_split(const ReducedInstance& inst, int G, const GaConfig& ga,
                         const AldaConfig& cfg, int n_threads) {
    ga.validate();
    cfg.validate();
    SplitSearch search(inst, G, ga, cfg, n_threads);
    return search.run();
}

}  // namespace isac
