#pragma once

// Verification runs: JSON config in, JSON report + CSV table + plot data out.
//
// Config (schema "harmonic.config/1"):
//
// {
//   "schema": "harmonic.config/1",
//   "name": "rn-gaussian",                       // optional, copied to the report
//   "group": "rn" | "product" | "motion" | "nilpotent",
//   "grid": {"half_extent": [8.0], "counts": [1024]},   // counts: powers of two
//   "functions": {"kind": "corpus" | "gaussian", "seed": 1, "count": 5},
//   "lattice": {"a": [1, 2], "b": [1, 2]},        // every value >= 1
//   "tolerance": {"ratio": 1e-6, "plancherel": 1e-7, "lambda_quadrature": 1e-4},   // optional overrides
//   "product": {"k": "Z4" | "S3" | "SO2" | "<group file>", "circle_truncation": 8},
//   "motion": {"n_theta": 128, "truncation": 32},
//   "nilpotent": {"descriptor": "threadlike3" | "<descriptor file>"},
//   "refine": {"levels": 3, "double": "grid" | "truncation" | "both",   // truncation: motion only
//              "quantity": "ratio" | "plancherel_ratio"},
//   "output": {"dir": "out"}
// }
//
// Relative paths resolve against the config file's directory.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "harmonic/compact_dual.hpp"
#include "harmonic/corpus.hpp"
#include "harmonic/euclidean_uncertainty.hpp"
#include "harmonic/motion_group.hpp"
#include "harmonic/nilpotent.hpp"
#include "harmonic/product_group.hpp"
#include "harmonic/sampled_field.hpp"

namespace harmonic {

inline constexpr const char* config_schema = "harmonic.config/1";
inline constexpr const char* report_schema = "harmonic.report/1";
inline constexpr const char* refine_schema = "harmonic.refine/1";
inline constexpr const char* max_cells_env = "HARMONIC_MAX_CELLS";
inline constexpr std::size_t default_max_cells = std::size_t{1} << 26;

/// Invalid configuration or arguments; raised before any computation.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RefineDouble { grid, truncation, both };

struct RunConfig {
    std::string name = "run";
    std::string group;
    std::vector<double> half_extent;
    std::vector<std::size_t> counts;
    std::string function_kind = "corpus";
    std::uint64_t seed = 1;
    std::size_t count = 5;
    std::vector<double> a_values{1.0}, b_values{1.0};
    double ratio_tol = 1e-6;
    double plancherel_tol = std::numeric_limits<double>::quiet_NaN();  // NaN: not checked
    // product
    std::string k_name = "Z4";
    std::optional<FiniteGroupData> k_group;  // loaded from a file
    int circle_truncation = 8;
    // motion
    std::size_t n_theta = 128;
    int truncation = 32;
    double lambda_tol = 1e-4;  // relative change that stops the panel doubling
    // nilpotent
    std::optional<CrossSectionDescriptor> descriptor;
    // refine
    std::size_t refine_levels = 3;
    RefineDouble refine_double = RefineDouble::grid;
    std::string refine_quantity;  // empty: group default
    std::string out_dir = "out";
    unsigned workers = 1;

    std::size_t dims() const { return counts.size(); }
};

namespace detail {

inline bool power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

inline std::vector<double> number_list(const nlohmann::json& j, const char* what) {
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array() || j.empty()) throw UsageError(std::string(what) + " must be a number or a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw UsageError(std::string(what) + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
    const std::filesystem::path p(path);
    return (p.is_absolute() || base.empty() ? p : base / p).string();
}

}  // namespace detail

/// Parses and checks a config; every problem is a UsageError.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    RunConfig c;
    try {
        if (!j.is_object()) throw UsageError("config must be a JSON object");
        if (j.value("schema", std::string{}) != config_schema)
            throw UsageError(std::string("config schema must be \"") + config_schema + "\"");
        c.name = j.value("name", c.name);
        c.group = j.at("group").get<std::string>();
        if (c.group != "rn" && c.group != "product" && c.group != "motion" && c.group != "nilpotent")
            throw UsageError("group must be one of rn, product, motion, nilpotent");

        // lattice first: a bad exponent is the most common mistake
        if (j.contains("lattice")) {
            const auto& l = j.at("lattice");
            if (l.contains("a")) c.a_values = detail::number_list(l.at("a"), "lattice.a");
            if (l.contains("b")) c.b_values = detail::number_list(l.at("b"), "lattice.b");
        }
        for (double a : c.a_values)
            if (!(a >= 1.0)) throw UsageError("a must be >= 1 (got " + format_number(a) + ")");
        for (double b : c.b_values)
            if (!(b >= 1.0)) throw UsageError("b must be >= 1 (got " + format_number(b) + ")");

        const auto& g = j.at("grid");
        c.half_extent = detail::number_list(g.at("half_extent"), "grid.half_extent");
        for (const auto& v : g.at("counts")) c.counts.push_back(v.get<std::size_t>());
        if (c.counts.empty()) throw UsageError("grid.counts must not be empty");
        if (c.half_extent.size() == 1 && c.counts.size() > 1) c.half_extent.assign(c.counts.size(), c.half_extent[0]);
        if (c.half_extent.size() != c.counts.size()) throw UsageError("grid.half_extent and grid.counts differ in length");
        for (double L : c.half_extent)
            if (!(L > 0.0)) throw UsageError("grid.half_extent must be positive");
        for (auto n : c.counts)
            if (!detail::power_of_two(n)) throw UsageError("grid sizes must be powers of two (got " + std::to_string(n) + ")");

        if (j.contains("functions")) {
            const auto& f = j.at("functions");
            c.function_kind = f.value("kind", c.function_kind);
            c.seed = f.value("seed", c.seed);
            c.count = f.value("count", c.count);
        }
        if (c.function_kind != "corpus" && c.function_kind != "gaussian")
            throw UsageError("functions.kind must be corpus or gaussian");
        if (c.function_kind == "gaussian") c.count = 1;
        if (c.count == 0) throw UsageError("functions.count must be >= 1");

        // group defaults, then overrides
        if (c.group == "rn" || c.group == "product") c.plancherel_tol = 1e-7;
        if (c.group == "motion") c.ratio_tol = 1e-4;
        if (c.group == "nilpotent") {
            c.ratio_tol = 1e-4;
            c.plancherel_tol = 1e-2;
        }
        if (j.contains("tolerance")) {
            const auto& t = j.at("tolerance");
            c.ratio_tol = t.value("ratio", c.ratio_tol);
            c.lambda_tol = t.value("lambda_quadrature", c.lambda_tol);
            if (t.contains("plancherel"))
                c.plancherel_tol = t.at("plancherel").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                                 : t.at("plancherel").get<double>();
        }
        if (!(c.ratio_tol >= 0.0)) throw UsageError("tolerance.ratio must be >= 0");
        if (!(c.lambda_tol > 0.0)) throw UsageError("tolerance.lambda_quadrature must be > 0");

        if (c.group == "product") {
            const auto p = j.value("product", nlohmann::json::object());
            c.k_name = p.value("k", c.k_name);
            c.circle_truncation = p.value("circle_truncation", c.circle_truncation);
            if (c.k_name != "Z4" && c.k_name != "S3" && c.k_name != "SO2") {
                const auto path = detail::resolve(c.k_name, base_dir);
                if (!std::filesystem::exists(path)) throw UsageError("group file not found: " + path);
                c.k_group = load_group(path);
                if (auto v = validate_group(*c.k_group); !v.ok())
                    throw UsageError("group file " + path + ": " + v.violations.front());
            }
            if (c.k_name == "SO2" && c.circle_truncation < 1) throw UsageError("product.circle_truncation must be >= 1");
        }
        if (c.group == "motion") {
            if (c.dims() != 2) throw UsageError("motion group runs need a 2-D grid");
            const auto m = j.value("motion", nlohmann::json::object());
            c.n_theta = m.value("n_theta", c.n_theta);
            c.truncation = m.value("truncation", c.truncation);
            if (c.truncation < 1) throw UsageError("motion.truncation must be >= 1");
            if (c.n_theta < 2 * static_cast<std::size_t>(c.truncation) + 2)
                throw UsageError("motion.n_theta must be at least 2 * truncation + 2");
        }
        if (c.group == "nilpotent") {
            const auto n = j.value("nilpotent", nlohmann::json::object());
            const std::string which = n.value("descriptor", std::string("threadlike") + std::to_string(c.dims()));
            if (which.rfind("threadlike", 0) == 0 && which.find('.') == std::string::npos) {
                const auto dim = std::stoul(which.substr(10));
                c.descriptor = threadlike_descriptor(dim);
            } else {
                const auto path = detail::resolve(which, base_dir);
                if (!std::filesystem::exists(path)) throw UsageError("descriptor file not found: " + path);
                c.descriptor = load_descriptor(path);
            }
            if (c.descriptor->n != c.dims())
                throw UsageError("descriptor dimension " + std::to_string(c.descriptor->n) + " differs from the grid dimension");
            detail::make_plan(*c.descriptor, true);
        }
        if (c.group == "rn" && c.dims() > 3) throw UsageError("rn runs support 1 to 3 dimensions");

        if (j.contains("refine")) {
            const auto& r = j.at("refine");
            c.refine_levels = r.value("levels", c.refine_levels);
            const std::string dbl = r.value("double", std::string("grid"));
            if (dbl == "grid") c.refine_double = RefineDouble::grid;
            else if (dbl == "truncation") c.refine_double = RefineDouble::truncation;
            else if (dbl == "both") c.refine_double = RefineDouble::both;
            else throw UsageError("refine.double must be grid, truncation or both");
            c.refine_quantity = r.value("quantity", std::string{});
            if (!c.refine_quantity.empty() && c.refine_quantity != "ratio" && c.refine_quantity != "plancherel_ratio")
                throw UsageError("refine.quantity must be ratio or plancherel_ratio");
        }
        if (j.contains("output")) c.out_dir = detail::resolve(j.at("output").value("dir", c.out_dir), base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    } catch (const UsageError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    return parse_config(j, std::filesystem::path(path).parent_path());
}

/// Cell cap from HARMONIC_MAX_CELLS (default 2^26).
inline std::size_t max_cells() {
    const char* v = std::getenv(max_cells_env);
    if (!v || !*v) return default_max_cells;
    char* end = nullptr;
    const auto n = std::strtoull(v, &end, 10);
    if (*end != '\0' || n == 0) throw UsageError(std::string(max_cells_env) + " must be a positive integer");
    return static_cast<std::size_t>(n);
}

// ---------------------------------------------------------------------------
// Cases
// ---------------------------------------------------------------------------

struct CaseRecord {
    std::string group;
    std::string function_id;
    std::size_t function_index = 0;
    double a = 1.0, b = 1.0;
    // NaN until computed
    double lhs = std::numeric_limits<double>::quiet_NaN();
    double position_term = std::numeric_limits<double>::quiet_NaN();
    double momentum_term = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double plancherel_ratio = std::numeric_limits<double>::quiet_NaN();
    double excluded_mass = 0.0;  // nilpotent singular band share
    double tail_mass = 0.0;      // motion lambda tail / spectral boundary share
    int truncation = 0;          // M for motion and the circle, 0 otherwise
    std::vector<std::string> diagnostics;
    std::string error;
    bool pass = false;

    std::string key() const {
        std::ostringstream os;
        os << group << '/' << std::setw(4) << std::setfill('0') << function_index << '/' << std::fixed
           << std::setprecision(4) << a << '/' << b;
        return os.str();
    }
};

struct VerificationReport {
    std::string name;
    std::string group;
    std::uint64_t seed = 0;
    std::vector<CaseRecord> records;
    double min_ratio = 0.0;
    double max_plancherel_defect = 0.0;
    double runtime_seconds = 0.0;

    bool all_pass() const {
        return std::all_of(records.begin(), records.end(), [](const CaseRecord& r) { return r.pass; });
    }
};

namespace detail {

inline Grid config_grid(const RunConfig& c) { return make_grid(c.dims(), c.half_extent, c.counts); }

inline std::size_t group_samples(const RunConfig& c) {
    if (c.group == "motion") return c.n_theta;
    if (c.group == "product") {
        if (c.k_group) return static_cast<std::size_t>(c.k_group->order);
        if (c.k_name == "SO2") return static_cast<std::size_t>(2 * c.circle_truncation + 1);
        return c.k_name == "S3" ? 6 : 4;
    }
    return 1;
}

inline std::size_t cell_count(const RunConfig& c) {
    std::size_t n = group_samples(c);
    for (auto k : c.counts) n *= k;
    return n;
}

inline void check_cells(const RunConfig& c) {
    const auto cap = max_cells();
    if (cell_count(c) > cap)
        throw UsageError("configuration needs " + std::to_string(cell_count(c)) + " cells, above the cap of " +
                         std::to_string(cap) + " (" + max_cells_env + ")");
}

inline GroupQuadrature config_quadrature(const RunConfig& c) {
    if (c.k_group) return quadrature_of(*c.k_group);
    if (c.k_name == "SO2") return quadrature_of(CircleDual(c.circle_truncation));
    return quadrature_of(builtin_group(c.k_name));
}

struct Subject {
    std::string id;
    SampledField field;
};

inline Subject build_subject(const RunConfig& c, const Grid& grid, std::size_t i) {
    const bool gauss = c.function_kind == "gaussian";
    if (c.group == "rn") {
        if (gauss) return {"gaussian", standard_gaussian(grid)};
        auto m = corpus_member(grid, c.seed, i);
        return {m.id, std::move(m.field)};
    }
    if (c.group == "product") {
        const auto q = config_quadrature(c);
        if (gauss) {
            const std::vector<cplx> one(q.size(), cplx(1.0));
            return {"gaussian", tensor_field(standard_gaussian(grid), one, q).base};
        }
        return {"product#" + std::to_string(i), product_corpus_member(grid, q, c.seed, i).base};
    }
    if (c.group == "motion") {
        if (gauss) return {"gaussian", motion_tensor(standard_gaussian(grid), c.n_theta, 0)};
        return {"motion#" + std::to_string(i), motion_corpus_member(grid, c.n_theta, c.seed, i)};
    }
    if (gauss) return {"gaussian", standard_gaussian(grid)};
    return {"nilpotent#" + std::to_string(i), nilpotent_corpus_member(grid, c.seed, i)};
}

// Keeps every `step`-th sample along each spatial axis; the coarse grid has
// the same extent, so its points are a subset of the fine ones.
inline SampledField subsample(const SampledField& f, std::size_t step) {
    if (step == 1) return f;
    const Grid& g = f.grid();
    std::vector<double> ext(g.dim());
    std::vector<std::size_t> cnt(g.dim());
    for (std::size_t d = 0; d < g.dim(); ++d) {
        ext[d] = g.half_extent(d);
        cnt[d] = g.count(d) / step;
    }
    const Grid coarse = make_grid(g.dim(), ext, cnt);
    const auto strides = g.strides();
    const std::size_t groups = f.group_size();
    std::vector<cplx> v(coarse.size() * groups);
    std::vector<std::size_t> idx(g.dim(), 0);
    for (std::size_t i = 0; i < coarse.size(); ++i, detail::advance(idx, coarse.counts())) {
        std::size_t src = 0;
        for (std::size_t d = 0; d < g.dim(); ++d) src += idx[d] * step * strides[d];
        for (std::size_t k = 0; k < groups; ++k) v[k * coarse.size() + i] = f.values()[k * g.size() + src];
    }
    std::vector<double> w(f.group_weights().begin(), f.group_weights().end());
    if (!f.has_group_axis()) w.clear();
    return SampledField(coarse, std::move(w), std::move(v));
}

inline void judge(const RunConfig& c, CaseRecord& r) {
    if (!r.error.empty()) {
        r.pass = false;
        return;
    }
    bool ok = std::isfinite(r.ratio) && r.ratio >= 1.0 - c.ratio_tol && r.diagnostics.empty();
    if (std::isfinite(c.plancherel_tol)) ok = ok && std::abs(r.plancherel_ratio - 1.0) <= c.plancherel_tol;
    r.pass = ok;
}

// All lattice cases of one function; errors become failed records.
inline std::vector<CaseRecord> run_subject(const RunConfig& c, const std::function<Subject()>& make, std::size_t index) {
    std::vector<CaseRecord> out;
    std::string id = c.group + "#" + std::to_string(index);
    auto fill = [&](const std::function<void(CaseRecord&, const MomentSpec&)>& body) {
        for (double a : c.a_values)
            for (double b : c.b_values) {
                CaseRecord r;
                r.group = c.group;
                r.function_id = id;
                r.function_index = index;
                r.a = a;
                r.b = b;
                try {
                    body(r, MomentSpec(a, b));
                } catch (const std::exception& e) {
                    r.error = e.what();
                }
                judge(c, r);
                out.push_back(std::move(r));
            }
    };
    auto take = [](CaseRecord& r, const UncertaintyTerms& t) {
        r.lhs = t.lhs;
        r.position_term = t.position_term;
        r.momentum_term = t.momentum_term;
        r.ratio = t.ratio;
        r.diagnostics.insert(r.diagnostics.end(), t.diagnostics.begin(), t.diagnostics.end());
    };
    try {
        auto s = make();
        id = s.id;
        const SampledField& f = s.field;
        if (c.group == "rn") {
            EuclideanMoments em(f);
            const double pr = l2_norm_sq(em.spectrum()) / em.norm_sq();
            const double tail = boundary_mass_fraction(em.spectrum());
            fill([&](CaseRecord& r, const MomentSpec& spec) {
                take(r, em.terms(spec));
                r.plancherel_ratio = pr;
                r.tail_mass = tail;
            });
        } else if (c.group == "product") {
            ProductField pf(f, config_quadrature(c));
            ProductSpectrum ps(pf);
            const double pr = ps.plancherel_ratio();
            const double tail = ps.dual_moment(0.0).boundary_fraction;
            fill([&](CaseRecord& r, const MomentSpec& spec) {
                take(r, ps.terms(spec));
                r.plancherel_ratio = pr;
                r.tail_mass = tail;
                r.truncation = pf.group.circle_truncation;
            });
        } else if (c.group == "motion") {
            MotionOptions opt;
            opt.M = c.truncation;
            MotionTransform T(f, opt);
            require_valid(T.norm_sq());
            const auto p = mn_plancherel_adaptive(T, 4, 32, c.lambda_tol);
            fill([&](CaseRecord& r, const MomentSpec& spec) {
                take(r, mn_uncertainty(f, p.spectrum, p.ratio, spec));
                for (const auto& d : p.diagnostics)
                    if (std::find(r.diagnostics.begin(), r.diagnostics.end(), d) == r.diagnostics.end())
                        r.diagnostics.push_back(d);
                r.plancherel_ratio = p.ratio;
                r.tail_mass = p.spectrum.tail_fraction;
                r.truncation = c.truncation;
            });
        } else {
            NilpotentOptions opt;
            opt.workers = 1;
            const auto ns = nilpotent_spectrum(f, *c.descriptor, opt);
            fill([&](CaseRecord& r, const MomentSpec& spec) {
                take(r, nilpotent_uncertainty(f, ns, spec));
                r.plancherel_ratio = ns.plancherel_ratio();
                r.excluded_mass = ns.excluded_fraction;
                r.tail_mass = ns.boundary_fraction;
            });
        }
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        fill([&](CaseRecord&, const MomentSpec&) { throw std::runtime_error(msg); });
    }
    return out;
}

// Runs body(i) for i in [0, count) on up to `workers` threads.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
}

inline void summarize(VerificationReport& rep) {
    std::sort(rep.records.begin(), rep.records.end(),
              [](const CaseRecord& x, const CaseRecord& y) { return x.key() < y.key(); });
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.max_plancherel_defect = 0.0;
    for (const auto& r : rep.records) {
        if (!r.error.empty()) continue;
        rep.min_ratio = std::min(rep.min_ratio, r.ratio);
        if (r.group != "motion") rep.max_plancherel_defect = std::max(rep.max_plancherel_defect, std::abs(r.plancherel_ratio - 1.0));
    }
    if (!std::isfinite(rep.min_ratio)) rep.min_ratio = std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Executes every (function, a, b) case of the config.
inline VerificationReport run_suite(const RunConfig& c) {
    detail::check_cells(c);
    const auto t0 = std::chrono::steady_clock::now();
    const Grid grid = detail::config_grid(c);
    VerificationReport rep;
    rep.name = c.name;
    rep.group = c.group;
    rep.seed = c.seed;
    std::vector<std::vector<CaseRecord>> per(c.count);
    detail::parallel_for(c.count, c.workers, [&](std::size_t i) {
        per[i] = detail::run_subject(c, [&] { return detail::build_subject(c, grid, i); }, i);
    });
    for (auto& v : per) rep.records.insert(rep.records.end(), v.begin(), v.end());
    detail::summarize(rep);
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

/// |delta| at or below this counts as converged to rounding (raised to
/// cells * eps * |value| for large grids).
inline constexpr double refine_noise_floor = 1e-12;

struct RefineSeries {
    std::string key;
    std::vector<double> values;  // per level
    bool monotone = false;
    bool contracting = false;    // |delta| shrinks >= 2x per level
    bool pass = false;
    double noise_floor = refine_noise_floor;
    std::string error;
};

struct RefineReport {
    std::string name;
    std::string group;
    std::string quantity;
    std::vector<std::vector<std::size_t>> level_counts;
    std::vector<int> level_truncation;
    std::vector<VerificationReport> levels;
    std::vector<RefineSeries> series;
    double runtime_seconds = 0.0;

    bool all_pass() const {
        return !series.empty() && std::all_of(series.begin(), series.end(), [](const RefineSeries& s) { return s.pass; });
    }
};

/// Checks that successive differences keep one sign and shrink by >= 2x,
/// treating differences under the noise floor as converged.
inline void assess_series(RefineSeries& s, double floor = refine_noise_floor) {
    s.monotone = s.contracting = true;
    int sign = 0;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < s.values.size(); ++k) {
        const double d = s.values[k] - s.values[k - 1];
        if (!std::isfinite(d)) {
            s.monotone = s.contracting = false;
            break;
        }
        if (std::abs(d) <= floor) {
            prev = 0.0;
            continue;
        }
        const int sg = d > 0 ? 1 : -1;
        if (sign != 0 && sg != sign) s.monotone = false;
        sign = sg;
        if (std::abs(d) > 0.5 * prev) s.contracting = false;
        prev = std::abs(d);
    }
    s.pass = s.error.empty() && s.monotone && s.contracting;
}

/// Reruns the suite with grid and/or truncation doubled per level. The
/// functions are built once on the finest grid and subsampled, so every
/// level sees the same function.
inline RefineReport refine_study(const RunConfig& base, std::size_t levels) {
    if (levels < 2) throw UsageError("refine needs at least 2 levels");
    const bool dbl_grid = base.refine_double != RefineDouble::truncation;
    const bool dbl_trunc = base.refine_double != RefineDouble::grid;
    if (dbl_trunc && base.group != "motion") throw UsageError("truncation refinement applies to motion runs only");
    std::vector<RunConfig> cfg(levels, base);
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t f = std::size_t{1} << l;
        if (dbl_grid)
            for (auto& n : cfg[l].counts) n *= f;
        if (dbl_trunc) {
            cfg[l].truncation = base.truncation * static_cast<int>(f);
            cfg[l].n_theta = std::max(base.n_theta, 2 * static_cast<std::size_t>(cfg[l].truncation) + 2);
        }
    }
    // the circle samples are part of the function; keep the finest everywhere
    for (auto& c : cfg) c.n_theta = cfg.back().n_theta;
    for (const auto& c : cfg) detail::check_cells(c);

    RefineReport rep;
    rep.name = base.name;
    rep.group = base.group;
    rep.quantity = !base.refine_quantity.empty() ? base.refine_quantity
                   : (base.group == "motion" || base.group == "nilpotent") ? "plancherel_ratio"
                                                                           : "ratio";
    const auto t0 = std::chrono::steady_clock::now();
    const Grid fine = detail::config_grid(cfg.back());
    std::vector<std::optional<detail::Subject>> subjects(base.count);
    std::vector<std::string> build_error(base.count);
    detail::parallel_for(base.count, base.workers, [&](std::size_t i) {
        try {
            subjects[i] = detail::build_subject(cfg.back(), fine, i);
        } catch (const std::exception& e) {
            build_error[i] = e.what();
        }
    });
    for (std::size_t l = 0; l < levels; ++l) {
        const auto& c = cfg[l];
        const std::size_t step = dbl_grid ? std::size_t{1} << (levels - 1 - l) : 1;
        VerificationReport vr;
        vr.name = c.name;
        vr.group = c.group;
        vr.seed = c.seed;
        std::vector<std::vector<CaseRecord>> per(c.count);
        detail::parallel_for(c.count, c.workers, [&](std::size_t i) {
            per[i] = detail::run_subject(
                c,
                [&]() -> detail::Subject {
                    if (!subjects[i]) throw std::runtime_error(build_error[i]);
                    return {subjects[i]->id, detail::subsample(subjects[i]->field, step)};
                },
                i);
        });
        for (auto& v : per) vr.records.insert(vr.records.end(), v.begin(), v.end());
        detail::summarize(vr);
        rep.level_counts.push_back(c.counts);
        rep.level_truncation.push_back(c.group == "motion" ? c.truncation : c.group == "product" ? c.circle_truncation : 0);
        rep.levels.push_back(std::move(vr));
    }
    const auto& first = rep.levels.front().records;
    for (std::size_t r = 0; r < first.size(); ++r) {
        RefineSeries s;
        s.key = first[r].key();
        for (const auto& lv : rep.levels) {
            const auto& rec = lv.records[r];
            if (!rec.error.empty() && s.error.empty()) s.error = rec.error;
            s.values.push_back(rep.quantity == "ratio" ? rec.ratio : rec.plancherel_ratio);
        }
        // rounding bound of a sum over the finest grid; motion values also
        // stop refining at the lambda quadrature tolerance
        double floor = refine_noise_floor;
        if (!s.values.empty() && std::isfinite(s.values.back()))
            floor = std::max(floor, static_cast<double>(detail::cell_count(cfg.back())) *
                                        std::numeric_limits<double>::epsilon() * std::abs(s.values.back()));
        if (base.group == "motion" && !s.values.empty() && std::isfinite(s.values.back()))
            floor = std::max(floor, base.lambda_tol * std::abs(s.values.back()));
        assess_series(s, floor);
        s.noise_floor = floor;
        rep.series.push_back(std::move(s));
    }
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

inline nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

// min ratio per distinct value of one lattice coordinate
inline std::string plot_csv(const std::vector<CaseRecord>& recs, bool by_a) {
    std::map<double, double> best;
    for (const auto& r : recs) {
        if (!r.error.empty()) continue;
        const double x = by_a ? r.a : r.b;
        auto it = best.find(x);
        if (it == best.end()) best[x] = r.ratio;
        else it->second = std::min(it->second, r.ratio);
    }
    std::string out = by_a ? "a,min_ratio\n" : "b,min_ratio\n";
    for (const auto& [x, y] : best) out += num(x) + "," + num(y) + "\n";
    return out;
}

}  // namespace detail

inline const char* csv_header =
    "key,group,function_id,a,b,lhs,position_term,momentum_term,ratio,plancherel_ratio,excluded_mass,tail_mass,"
    "truncation,pass,diagnostics,error\n";

/// Flat table, one row per case; deterministic for a fixed config and seed.
inline std::string cases_csv(const VerificationReport& rep) {
    std::string out = csv_header;
    for (const auto& r : rep.records) {
        const std::vector<std::string> cols{r.key(),
                                            r.group,
                                            r.function_id,
                                            detail::num(r.a),
                                            detail::num(r.b),
                                            detail::num(r.lhs),
                                            detail::num(r.position_term),
                                            detail::num(r.momentum_term),
                                            detail::num(r.ratio),
                                            detail::num(r.plancherel_ratio),
                                            detail::num(r.excluded_mass),
                                            detail::num(r.tail_mass),
                                            std::to_string(r.truncation),
                                            r.pass ? "true" : "false",
                                            detail::join(r.diagnostics, "; "),
                                            r.error};
        for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + detail::csv_field(cols[i]);
        out += "\n";
    }
    return out;
}

inline nlohmann::json record_json(const CaseRecord& r) {
    return {{"key", r.key()},
            {"group", r.group},
            {"function_id", r.function_id},
            {"a", r.a},
            {"b", r.b},
            {"lhs", detail::jnum(r.lhs)},
            {"position_term", detail::jnum(r.position_term)},
            {"momentum_term", detail::jnum(r.momentum_term)},
            {"ratio", detail::jnum(r.ratio)},
            {"plancherel_ratio", detail::jnum(r.plancherel_ratio)},
            {"excluded_mass", detail::jnum(r.excluded_mass)},
            {"tail_mass", detail::jnum(r.tail_mass)},
            {"truncation", r.truncation},
            {"diagnostics", r.diagnostics},
            {"error", r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error)},
            {"pass", r.pass}};
}

/// The only field that differs between identical runs.
inline nlohmann::json run_info(double runtime_seconds) {
    return {{"generated_at", detail::utc_timestamp()}, {"runtime_seconds", runtime_seconds}};
}

inline nlohmann::json report_json(const VerificationReport& rep, bool with_timestamp = true) {
    auto recs = nlohmann::json::array();
    for (const auto& r : rep.records) recs.push_back(record_json(r));
    std::size_t failed = 0;
    for (const auto& r : rep.records) failed += r.pass ? 0 : 1;
    nlohmann::json j{{"schema", report_schema},
                     {"name", rep.name},
                     {"group", rep.group},
                     {"seed", rep.seed},
                     {"records", recs},
                     {"summary",
                      {{"cases", rep.records.size()},
                       {"failed", failed},
                       {"all_pass", rep.all_pass()},
                       {"min_ratio", detail::jnum(rep.min_ratio)},
                       {"max_plancherel_defect", detail::jnum(rep.max_plancherel_defect)}}}};
    j["run_info"] = with_timestamp ? run_info(rep.runtime_seconds) : nlohmann::json(nullptr);
    return j;
}

/// report.json, cases.csv, ratio_vs_a.csv, ratio_vs_b.csv under dir.
inline void write_report(const VerificationReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_text(dir / "report.json", report_json(rep).dump(2) + "\n");
    detail::write_text(dir / "cases.csv", cases_csv(rep));
    detail::write_text(dir / "ratio_vs_a.csv", detail::plot_csv(rep.records, true));
    detail::write_text(dir / "ratio_vs_b.csv", detail::plot_csv(rep.records, false));
}

/// One row per (series, level).
inline std::string refine_csv(const RefineReport& rep) {
    std::string out = "key,level,counts,truncation,value,delta,monotone,contracting,pass\n";
    for (const auto& s : rep.series)
        for (std::size_t l = 0; l < s.values.size(); ++l) {
            std::vector<std::string> cnt;
            for (auto n : rep.level_counts[l]) cnt.push_back(std::to_string(n));
            const double delta = l ? s.values[l] - s.values[l - 1] : std::numeric_limits<double>::quiet_NaN();
            const std::vector<std::string> cols{s.key,
                                                std::to_string(l),
                                                detail::join(cnt, "x"),
                                                std::to_string(rep.level_truncation[l]),
                                                detail::num(s.values[l]),
                                                detail::num(delta),
                                                s.monotone ? "true" : "false",
                                                s.contracting ? "true" : "false",
                                                s.pass ? "true" : "false"};
            for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + detail::csv_field(cols[i]);
            out += "\n";
        }
    return out;
}

inline nlohmann::json refine_json(const RefineReport& rep, bool with_timestamp = true) {
    auto series = nlohmann::json::array();
    for (const auto& s : rep.series) {
        auto vals = nlohmann::json::array();
        for (double v : s.values) vals.push_back(detail::jnum(v));
        series.push_back({{"key", s.key},
                          {"values", vals},
                          {"monotone", s.monotone},
                          {"contracting", s.contracting},
                          {"noise_floor", s.noise_floor},
                          {"pass", s.pass},
                          {"error", s.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(s.error)}});
    }
    auto levels = nlohmann::json::array();
    for (std::size_t l = 0; l < rep.levels.size(); ++l)
        levels.push_back({{"counts", rep.level_counts[l]},
                          {"truncation", rep.level_truncation[l]},
                          {"report", report_json(rep.levels[l], false)}});
    nlohmann::json j{{"schema", refine_schema},
                     {"name", rep.name},
                     {"group", rep.group},
                     {"quantity", rep.quantity},
                     {"series", series},
                     {"levels", levels},
                     {"all_pass", rep.all_pass()}};
    j["run_info"] = with_timestamp ? run_info(rep.runtime_seconds) : nlohmann::json(nullptr);
    return j;
}

/// refine.json, refine.csv and ratio_vs_refinement.csv (level, value per series).
inline void write_refine(const RefineReport& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    detail::write_text(dir / "refine.json", refine_json(rep).dump(2) + "\n");
    detail::write_text(dir / "refine.csv", refine_csv(rep));
    std::string plot = "level," + rep.quantity + "\n";
    for (const auto& s : rep.series)
        for (std::size_t l = 0; l < s.values.size(); ++l) plot += std::to_string(l) + "," + detail::num(s.values[l]) + "\n";
    detail::write_text(dir / "ratio_vs_refinement.csv", plot);
}

}  // namespace harmonic
