#pragma once

// Reproduction harness: degrade -> estimate -> restore -> evaluate, with every
// stage reading and writing artifacts in one output directory.

#include "svtv/admm.hpp"
#include "svtv/degrade.hpp"
#include "svtv/ggd.hpp"
#include "svtv/image_io.hpp"
#include "svtv/metrics.hpp"
#include "svtv/synthetic.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <png.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace svtv {

inline constexpr const char* kLibraryVersion = "svtv 1.0.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDivergence = 3, kExitIo = 4 };

enum class DiagFormat { Kv, Jsonl };

struct MuSweep {
    bool enabled = false;
    double min = 1e-1;
    double max = 1e3;
    int count = 15;

    std::vector<double> grid() const
    {
        std::vector<double> out;
        if (count == 1) return {min};
        for (int k = 0; k < count; ++k)
            out.push_back(std::exp(std::log(min) + (std::log(max) - std::log(min)) * k / (count - 1)));
        return out;
    }
};

struct ExperimentConfig {
    // [input]
    std::string image = "synthetic:geometric:64";
    std::string name;
    // [blur]
    int band = 5;
    double blur_sigma = 1.0;
    // [noise]
    NoiseSpec noise{NoiseKind::Awgn, 0.0, 1, 20.0};
    // [estimate]
    int window = 3;
    double p_bar = kDefaultPrefilterThreshold;
    double p_min = kDefaultPMin;
    double alpha_max = kDefaultAlphaMax;
    std::optional<double> p_global; // estimated from the observation when unset
    // [solver]
    std::optional<int> fidelity; // 2 for AWGN, 1 otherwise when unset
    std::vector<Variant> variants{Variant::TV, Variant::TVp, Variant::TVpSv, Variant::TVpaSv};
    double beta_r = 50.0;
    double beta_t = 10.0;
    double tau = 1.0;
    std::optional<double> mu;
    MuSweep sweep;
    double tol = 1e-4;
    int max_iter = 500;
    // [output]
    std::filesystem::path out_dir = "run";
    DiagFormat diag_format = DiagFormat::Kv;

    int effective_fidelity() const { return fidelity.value_or(noise.kind == NoiseKind::Awgn ? 2 : 1); }

    std::string display_name() const
    {
        if (!name.empty()) return name;
        if (image.rfind("synthetic:", 0) == 0) {
            const std::string rest = image.substr(10);
            return rest.substr(0, rest.find(':'));
        }
        return std::filesystem::path(image).stem().string();
    }

    void validate() const
    {
        try {
            noise.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (band < 1 || band % 2 == 0) throw ConfigError("blur.band must be a positive odd integer");
        if (!(blur_sigma > 0.0)) throw ConfigError("blur.sigma must be positive");
        if (window < 3) throw ConfigError("estimate.window must be at least 3");
        if (!(p_bar > 0.0 && p_bar <= 1.0)) throw ConfigError("estimate.p_bar must lie in (0,1]");
        if (!(p_min > 0.0 && p_min < 2.0)) throw ConfigError("estimate.p_min must lie in (0,2)");
        if (!(alpha_max > 0.0)) throw ConfigError("estimate.alpha_max must be positive");
        if (p_global && !(*p_global > 0.0 && *p_global <= 2.0)) throw ConfigError("estimate.p_global must lie in (0,2]");
        if (variants.empty()) throw ConfigError("solver.variants must not be empty");
        const int q = effective_fidelity();
        if (q != 1 && q != 2) throw ConfigError("solver.fidelity must be 1 or 2");
        if (!(beta_r > 0.0 && beta_t > 0.0)) throw ConfigError("solver penalties must be positive");
        if (!(tau > 0.0)) throw ConfigError("solver.tau must be positive");
        if (!(tol > 0.0) || max_iter < 1) throw ConfigError("solver.tol and solver.max_iter must be positive");
        if (sweep.enabled && (!(sweep.min > 0.0) || !(sweep.max >= sweep.min) || sweep.count < 1))
            throw ConfigError("invalid mu sweep grid");
        if (q == 1 && !mu && !sweep.enabled) throw ConfigError("L1 fidelity needs solver.mu or a mu sweep");
        if (q == 2 && !mu && !sweep.enabled && noise.kind == NoiseKind::Spn)
            throw ConfigError("discrepancy mode needs an additive noise level; set solver.mu");
        if (image.rfind("synthetic:", 0) != 0 && !std::filesystem::exists(image))
            throw ConfigError("input image '" + image + "' does not exist");
    }
};

namespace detail {

inline std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline bool parse_bool(const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected a boolean, got '" + s + "'");
}

inline DiagFormat parse_diag_format(const std::string& s)
{
    if (s == "kv") return DiagFormat::Kv;
    if (s == "jsonl") return DiagFormat::Jsonl;
    throw ConfigError("diag format must be 'kv' or 'jsonl', got '" + s + "'");
}

inline std::string to_string(DiagFormat f) { return f == DiagFormat::Kv ? "kv" : "jsonl"; }

} // namespace detail

/// Parse a flat INI file with [input] [blur] [noise] [estimate] [solver] [output] sections.
inline ExperimentConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    static const std::map<std::string, std::vector<std::string>> known = {
        {"input", {"image", "name"}},
        {"blur", {"band", "sigma"}},
        {"noise", {"kind", "level", "target_bsnr", "seed"}},
        {"estimate", {"window", "p_bar", "p_min", "alpha_max", "p_global"}},
        {"solver", {"fidelity", "variants", "beta_r", "beta_t", "tau", "mu", "mu_sweep", "mu_sweep_min",
                    "mu_sweep_max", "mu_sweep_count", "tol", "max_iter"}},
        {"output", {"dir", "diag_format"}},
    };
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("config: unknown key '" + section + "." + key + "'");
    }

    ExperimentConfig cfg;
    try {
        const auto str = [&](const char* key) { return tree.get_optional<std::string>(key); };
        const auto num = [&](const char* key) -> std::optional<double> {
            const auto s = str(key);
            if (!s || s->empty() || *s == "auto") return std::nullopt;
            std::size_t used = 0;
            const double v = std::stod(*s, &used);
            if (used != s->size()) throw ConfigError(std::string("config: '") + key + "' is not a number");
            return v;
        };
        const auto integer = [&](const char* key) -> std::optional<long long> {
            const auto s = str(key);
            if (!s || s->empty() || *s == "auto") return std::nullopt;
            std::size_t used = 0;
            const long long v = std::stoll(*s, &used);
            if (used != s->size()) throw ConfigError(std::string("config: '") + key + "' is not an integer");
            return v;
        };

        if (auto v = str("input.image")) cfg.image = *v;
        if (auto v = str("input.name")) cfg.name = *v;
        if (auto v = integer("blur.band")) cfg.band = static_cast<int>(*v);
        if (auto v = num("blur.sigma")) cfg.blur_sigma = *v;
        if (auto v = str("noise.kind")) cfg.noise.kind = parse_noise_kind(*v);
        if (auto v = num("noise.level")) cfg.noise.level = *v;
        cfg.noise.target_bsnr = num("noise.target_bsnr");
        if (!tree.get_optional<std::string>("noise.target_bsnr") && !tree.get_optional<std::string>("noise.level"))
            cfg.noise.target_bsnr = 20.0;
        if (cfg.noise.kind == NoiseKind::Spn) cfg.noise.target_bsnr.reset();
        if (auto v = integer("noise.seed")) cfg.noise.seed = static_cast<std::uint64_t>(*v);
        if (auto v = integer("estimate.window")) cfg.window = static_cast<int>(*v);
        if (auto v = num("estimate.p_bar")) cfg.p_bar = *v;
        if (auto v = num("estimate.p_min")) cfg.p_min = *v;
        if (auto v = num("estimate.alpha_max")) cfg.alpha_max = *v;
        cfg.p_global = num("estimate.p_global");
        if (auto v = integer("solver.fidelity")) cfg.fidelity = static_cast<int>(*v);
        if (auto v = str("solver.variants")) {
            cfg.variants.clear();
            for (const auto& item : detail::split_list(*v)) cfg.variants.push_back(parse_variant(item));
        }
        if (auto v = num("solver.beta_r")) cfg.beta_r = *v;
        if (auto v = num("solver.beta_t")) cfg.beta_t = *v;
        if (auto v = num("solver.tau")) cfg.tau = *v;
        cfg.mu = num("solver.mu");
        if (auto v = str("solver.mu_sweep")) cfg.sweep.enabled = detail::parse_bool(*v);
        if (auto v = num("solver.mu_sweep_min")) cfg.sweep.min = *v;
        if (auto v = num("solver.mu_sweep_max")) cfg.sweep.max = *v;
        if (auto v = integer("solver.mu_sweep_count")) cfg.sweep.count = static_cast<int>(*v);
        if (auto v = num("solver.tol")) cfg.tol = *v;
        if (auto v = integer("solver.max_iter")) cfg.max_iter = static_cast<int>(*v);
        if (auto v = str("output.dir")) cfg.out_dir = *v;
        if (auto v = str("output.diag_format")) cfg.diag_format = detail::parse_diag_format(*v);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    return parse_config(in);
}

/// Canonical, complete rendering of a config; parse_config(render_config(c)) reproduces c.
inline std::string render_config(const ExperimentConfig& c)
{
    using detail::format_number;
    std::ostringstream o;
    o << "[input]\nimage = " << c.image << "\n";
    if (!c.name.empty()) o << "name = " << c.name << "\n";
    o << "\n[blur]\nband = " << c.band << "\nsigma = " << format_number(c.blur_sigma) << "\n";
    o << "\n[noise]\nkind = " << to_string(c.noise.kind) << "\nlevel = " << format_number(c.noise.level) << "\n";
    o << "target_bsnr = " << (c.noise.target_bsnr ? format_number(*c.noise.target_bsnr) : "auto") << "\n";
    o << "seed = " << c.noise.seed << "\n";
    o << "\n[estimate]\nwindow = " << c.window << "\np_bar = " << format_number(c.p_bar)
      << "\np_min = " << format_number(c.p_min) << "\nalpha_max = " << format_number(c.alpha_max)
      << "\np_global = " << (c.p_global ? format_number(*c.p_global) : "auto") << "\n";
    o << "\n[solver]\nfidelity = " << c.effective_fidelity() << "\nvariants = ";
    for (std::size_t i = 0; i < c.variants.size(); ++i) o << (i ? "," : "") << to_string(c.variants[i]);
    o << "\nbeta_r = " << format_number(c.beta_r) << "\nbeta_t = " << format_number(c.beta_t)
      << "\ntau = " << format_number(c.tau) << "\nmu = " << (c.mu ? format_number(*c.mu) : "auto")
      << "\nmu_sweep = " << (c.sweep.enabled ? "true" : "false") << "\nmu_sweep_min = " << format_number(c.sweep.min)
      << "\nmu_sweep_max = " << format_number(c.sweep.max) << "\nmu_sweep_count = " << c.sweep.count
      << "\ntol = " << format_number(c.tol) << "\nmax_iter = " << c.max_iter << "\n";
    o << "\n[output]\ndir = " << c.out_dir.string() << "\ndiag_format = " << detail::to_string(c.diag_format) << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Artifact layout
// ---------------------------------------------------------------------------

namespace artifact {
inline constexpr const char* config = "config.ini";
inline constexpr const char* versions = "versions.txt";
inline constexpr const char* original = "original.ggmap";
inline constexpr const char* original_png = "original.png";
inline constexpr const char* blurred = "blurred.ggmap";
inline constexpr const char* blurred_png = "blurred.png";
inline constexpr const char* observed = "observed.ggmap";
inline constexpr const char* observed_png = "observed.png";
inline constexpr const char* mask_png = "mask.png";
inline constexpr const char* degrade_meta = "degrade.txt";
inline constexpr const char* p_map = "p.ggmap";
inline constexpr const char* p_png = "p.png";
inline constexpr const char* alpha_map = "alpha.ggmap";
inline constexpr const char* alpha_png = "alpha.png";
inline constexpr const char* estimate_meta = "estimate.txt";
inline constexpr const char* summary = "summary.tsv";
inline constexpr const char* timings = "timings.tsv"; // wall-clock only; the one non-reproducible file
inline constexpr const char* results = "results.tsv";

inline std::string restored(const std::string& label) { return "restored_" + label + ".ggmap"; }
inline std::string restored_png(const std::string& label) { return "restored_" + label + ".png"; }
inline std::string diagnostics(const std::string& label, DiagFormat f)
{
    return "diag_" + label + (f == DiagFormat::Kv ? ".kv" : ".jsonl");
}
inline std::string sweep(const std::string& label) { return "sweep_" + label + ".tsv"; }
} // namespace artifact

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

inline std::string get_key(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::filesystem::path& from)
{
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError("'" + from.string() + "' lacks key '" + key + "'");
    return it->second;
}

inline void require_file(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw IoError("missing artifact '" + path.string() + "'");
}

inline void prepare_run_dir(const ExperimentConfig& cfg)
{
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir.string() + "'");
    write_text(cfg.out_dir / artifact::config, render_config(cfg));
    std::ostringstream v;
    v << "library=" << kLibraryVersion << "\nrng=" << CounterRng::name << "\nfftw=" << fftw_version
      << "\nlibpng=" << png_get_libpng_ver(nullptr) << "\n";
    write_text(cfg.out_dir / artifact::versions, v.str());
}

inline std::string format_record_kv(const IterationRecord& r)
{
    using detail::format_number;
    std::string s = "iter=" + std::to_string(r.iteration) + " objective=" + format_number(r.objective) +
                    " rel_change=" + format_number(r.rel_change) + " residual_r=" + format_number(r.residual_r) +
                    " residual_t=" + format_number(r.residual_t) + " mu=" + format_number(r.mu);
    if (!std::isnan(r.u_solve_residual)) s += " u_solve_residual=" + format_number(r.u_solve_residual);
    return s;
}

inline nlohmann::json record_json(const IterationRecord& r)
{
    nlohmann::json j = {{"iter", r.iteration},         {"objective", r.objective},   {"rel_change", r.rel_change},
                        {"residual_r", r.residual_r}, {"residual_t", r.residual_t}, {"mu", r.mu}};
    if (!std::isnan(r.u_solve_residual)) j["u_solve_residual"] = r.u_solve_residual;
    return j;
}

} // namespace detail

/// One record per iteration, then a final summary record.
inline std::string format_diagnostics(const std::vector<IterationRecord>& history, const std::string& termination,
                                      int iterations, double final_mu, DiagFormat fmt)
{
    std::ostringstream o;
    for (const auto& r : history) {
        if (fmt == DiagFormat::Kv) o << detail::format_record_kv(r) << "\n";
        else o << detail::record_json(r).dump() << "\n";
    }
    if (fmt == DiagFormat::Kv) {
        o << "summary termination=" << termination << " iterations=" << iterations
          << " final_mu=" << detail::format_number(final_mu) << "\n";
    } else {
        o << nlohmann::json{{"summary", true}, {"termination", termination}, {"iterations", iterations},
                            {"final_mu", final_mu}}
                 .dump()
          << "\n";
    }
    return o.str();
}

inline ImageGrid load_input_image(const ExperimentConfig& cfg)
{
    if (cfg.image.rfind("synthetic:", 0) == 0) {
        const std::string rest = cfg.image.substr(10);
        const auto colon = rest.find(':');
        const std::string kind = rest.substr(0, colon);
        std::size_t size = 64;
        try {
            if (colon != std::string::npos) size = std::stoul(rest.substr(colon + 1));
            return synthetic_image(kind, size);
        } catch (const std::exception& e) {
            throw ConfigError("bad synthetic image spec '" + cfg.image + "': " + e.what());
        }
    }
    return read_image(cfg.image);
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

inline CorruptionRecord cmd_degrade(const ExperimentConfig& cfg)
{
    cfg.validate();
    detail::prepare_run_dir(cfg);
    const ImageGrid original = load_input_image(cfg);
    const BlurKernel kernel = make_gaussian_psf(cfg.band, cfg.blur_sigma);
    BlurSpectrum spec;
    try {
        spec = spectrum_of(kernel, original.height(), original.width(), 1.0);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const ImageGrid blurred = apply_blur(original, spec);
    const CorruptionRecord rec = corrupt(blurred, cfg.noise);

    const auto& dir = cfg.out_dir;
    write_raster(dir / artifact::original, original, "u");
    write_raster(dir / artifact::blurred, blurred, "Ku");
    write_raster(dir / artifact::observed, rec.observed, "g");
    write_image(dir / artifact::original_png, original, 16);
    write_image(dir / artifact::blurred_png, blurred, 16);
    write_image(dir / artifact::observed_png, rec.observed, 16);
    if (rec.kind == NoiseKind::Spn) write_image(dir / artifact::mask_png, mask_to_image(rec.mask), 8);
    else std::filesystem::remove(dir / artifact::mask_png);

    std::ostringstream meta;
    meta << "kind=" << to_string(rec.kind) << "\nlevel=" << detail::format_number(rec.level) << "\nseed=" << rec.seed
         << "\nrng=" << CounterRng::name << "\nrealized_bsnr=" << format_db(rec.realized_bsnr) << "\n";
    if (cfg.noise.target_bsnr) meta << "target_bsnr=" << detail::format_number(*cfg.noise.target_bsnr) << "\n";
    if (rec.kind == NoiseKind::Spn) meta << "realized_fraction=" << detail::format_number(rec.realized_fraction) << "\n";
    meta << "noise_std=" << detail::format_number(noise_std(rec)) << "\nblur_band=" << cfg.band
         << "\nblur_sigma=" << detail::format_number(cfg.blur_sigma) << "\n";
    detail::write_text(dir / artifact::degrade_meta, meta.str());
    return rec;
}

inline ParamMaps cmd_estimate(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto& dir = cfg.out_dir;
    detail::require_file(dir / artifact::observed);
    const ImageGrid g = read_raster(dir / artifact::observed, "g");

    std::optional<Mask> mask;
    if (cfg.noise.kind == NoiseKind::Spn) {
        if (!std::filesystem::exists(dir / artifact::mask_png))
            throw IoError("SPN estimation needs the corruption mask '" + (dir / artifact::mask_png).string() + "'");
        mask = image_to_mask(read_image(dir / artifact::mask_png));
        if (mask->height() != g.height() || mask->width() != g.width())
            throw IoError("mask dimensions do not match the observation");
    }

    const RatioLookup lut = build_ratio_lookup(cfg.p_min, kDefaultLutSize);
    EstimationOptions opt;
    opt.window = cfg.window;
    opt.p_bar = cfg.p_bar;
    opt.alpha_max = cfg.alpha_max;
    const ParamMaps maps = estimate_maps(g, cfg.noise.kind, mask ? &*mask : nullptr, lut, opt);

    const ImageGrid source = mask ? spn_prefilter(g, *mask, cfg.p_bar) : g;
    const double p_global = cfg.p_global.value_or(estimate_global_p(grad_magnitude(source), lut));

    write_raster(dir / artifact::p_map, maps.p, "p");
    write_raster(dir / artifact::alpha_map, maps.alpha, "alpha");
    write_image(dir / artifact::p_png, rescale_for_display(maps.p), 8);
    write_image(dir / artifact::alpha_png, rescale_for_display(maps.alpha), 8);
    detail::write_text(dir / artifact::estimate_meta, "window=" + std::to_string(cfg.window) +
                                                           "\np_global=" + detail::format_number(p_global) + "\n");
    return maps;
}

struct RestoreSummary {
    std::string variant; // e.g. "TVpa-sv-L2"
    int fidelity = 2;
    std::string mode;    // discrepancy | fixed | sweep
    double mu = 0.0;     // final mu (discrepancy) or the fixed / selected mu
    double delta = 0.0;  // discrepancy level, 0 when unused
    int iterations = 0;
    std::string termination;
    double isnr_db = kUndefinedDb;
    double seconds = 0.0;
};

inline std::string summary_header()
{
    return "variant\tfidelity\tmode\tmu\tdelta\titerations\ttermination\tisnr_db\n";
}

inline std::string summary_row(const RestoreSummary& s)
{
    using detail::format_number;
    return s.variant + "\t" + std::to_string(s.fidelity) + "\t" + s.mode + "\t" + format_number(s.mu) + "\t" +
           format_number(s.delta) + "\t" + std::to_string(s.iterations) + "\t" + s.termination + "\t" +
           format_db(s.isnr_db) + "\n";
}

struct RestoreOutcome {
    std::vector<RestoreSummary> rows;
    bool diverged = false;
};

inline RestoreOutcome cmd_restore(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto& dir = cfg.out_dir;
    for (const char* f : {artifact::observed, artifact::original, artifact::degrade_meta, artifact::p_map,
                          artifact::alpha_map, artifact::estimate_meta})
        detail::require_file(dir / f);

    const ImageGrid g = read_raster(dir / artifact::observed, "g");
    const ImageGrid truth = read_raster(dir / artifact::original, "u");
    ParamMaps estimated;
    estimated.p = read_raster(dir / artifact::p_map, "p");
    estimated.alpha = read_raster(dir / artifact::alpha_map, "alpha");
    estimated.window = cfg.window;
    if (!estimated.p.same_shape(g) || !estimated.alpha.same_shape(g))
        throw IoError("parameter maps do not match the observation");

    const auto meta = detail::read_key_values(dir / artifact::degrade_meta);
    const auto emeta = detail::read_key_values(dir / artifact::estimate_meta);
    const double sigma = std::stod(detail::get_key(meta, "noise_std", dir / artifact::degrade_meta));
    const double p_global = std::stod(detail::get_key(emeta, "p_global", dir / artifact::estimate_meta));
    const BlurKernel kernel = make_gaussian_psf(cfg.band, cfg.blur_sigma);

    const int q = cfg.effective_fidelity();
    SolverConfig base;
    base.fidelity = q;
    base.beta_r = cfg.beta_r;
    base.beta_t = cfg.beta_t;
    base.tol = cfg.tol;
    base.max_iter = cfg.max_iter;

    std::string mode;
    std::vector<double> mus;
    if (cfg.sweep.enabled) {
        mode = "sweep";
        mus = cfg.sweep.grid();
    } else if (cfg.mu) {
        mode = "fixed";
        mus = {*cfg.mu};
    } else {
        if (q != 2) throw ConfigError("L1 fidelity needs solver.mu or a mu sweep");
        if (!(sigma > 0.0)) throw ConfigError("discrepancy mode needs a positive noise level");
        mode = "discrepancy";
        base.delta = discrepancy_level(sigma, g.size(), cfg.tau);
    }

    RestoreOutcome outcome;
    std::string summary = summary_header();
    std::string timings = "variant\tseconds\n";
    for (const Variant v : cfg.variants) {
        const std::string label = variant_label(v, q);
        const ParamMaps maps = maps_for_variant(v, estimated, p_global);
        const auto t0 = std::chrono::steady_clock::now();

        RestoreSummary row;
        row.variant = label;
        row.fidelity = q;
        row.mode = mode;
        row.delta = base.delta.value_or(0.0);

        std::optional<RestoreResult> best;
        double best_isnr = -kInfiniteDb, best_mu = 0.0;
        std::vector<IterationRecord> failed_history;
        int failed_at = 0;
        std::string sweep_table = "mu\titerations\ttermination\tisnr_db\n";
        const std::vector<double> run_mus = mode == "discrepancy" ? std::vector<double>{0.0} : mus;
        for (const double mu : run_mus) {
            SolverConfig sc = base;
            if (mode != "discrepancy") sc.mu = mu;
            try {
                RestoreResult res = restore(g, kernel, maps, sc);
                const double score = isnr(g, truth, res.u);
                sweep_table += detail::format_number(mu) + "\t" + std::to_string(res.iterations) + "\t" +
                               to_string(res.termination) + "\t" + format_db(score) + "\n";
                // NaN scores (noiseless observation) never replace a finite one.
                if (!best || score > best_isnr) {
                    best_isnr = score;
                    best_mu = mode == "discrepancy" ? res.final_mu : mu;
                    best = std::move(res);
                }
            } catch (const DivergenceError& e) {
                sweep_table += detail::format_number(mu) + "\t" + std::to_string(e.iteration()) + "\tdiverged\tundefined\n";
                failed_history = e.history();
                failed_at = e.iteration();
            }
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (mode == "sweep") detail::write_text(dir / artifact::sweep(label), sweep_table);

        if (!best) {
            outcome.diverged = true;
            row.termination = "diverged";
            row.iterations = failed_at;
            detail::write_text(dir / artifact::diagnostics(label, cfg.diag_format),
                               format_diagnostics(failed_history, "diverged", failed_at, 0.0, cfg.diag_format));
        } else {
            row.mu = best_mu;
            row.iterations = best->iterations;
            row.termination = to_string(best->termination);
            row.isnr_db = isnr(g, truth, best->u);
            write_raster(dir / artifact::restored(label), best->u, "u");
            write_image(dir / artifact::restored_png(label), best->u, 16);
            detail::write_text(dir / artifact::diagnostics(label, cfg.diag_format),
                               format_diagnostics(best->history, row.termination, best->iterations, best->final_mu,
                                                  cfg.diag_format));
        }
        summary += summary_row(row);
        timings += label + "\t" + detail::format_number(row.seconds) + "\n";
        outcome.rows.push_back(row);
    }
    detail::write_text(dir / artifact::summary, summary);
    detail::write_text(dir / artifact::timings, timings);
    return outcome;
}

inline std::vector<QualityReport> cmd_evaluate(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto& dir = cfg.out_dir;
    for (const char* f : {artifact::observed, artifact::original, artifact::blurred}) detail::require_file(dir / f);
    const ImageGrid g = read_raster(dir / artifact::observed, "g");
    const ImageGrid truth = read_raster(dir / artifact::original, "u");
    const ImageGrid blurred = read_raster(dir / artifact::blurred, "Ku");
    const BlurKernel kernel = make_gaussian_psf(cfg.band, cfg.blur_sigma);
    const BlurSpectrum spec = spectrum_of(kernel, g.height(), g.width(), 1.0);
    const int q = cfg.effective_fidelity();

    std::vector<QualityReport> rows;
    std::string table = "image\tvariant\tbsnr_db\tisnr_db\tresidual_norm\terror_norm\n";
    for (const Variant v : cfg.variants) {
        const std::string label = variant_label(v, q);
        const auto path = dir / artifact::restored(label);
        detail::require_file(path);
        const ImageGrid u = read_raster(path, "u");
        QualityReport r;
        r.image = cfg.display_name();
        r.variant = label;
        r.bsnr_db = bsnr(g, blurred);
        r.isnr_db = isnr(g, truth, u);
        r.residual_norm = norm2(apply_blur(u, spec) - g);
        r.error_norm = norm2(u - truth);
        table += r.image + "\t" + r.variant + "\t" + format_db(r.bsnr_db) + "\t" + format_db(r.isnr_db) + "\t" +
                 detail::format_number(r.residual_norm) + "\t" + detail::format_number(r.error_norm) + "\n";
        rows.push_back(r);
    }
    detail::write_text(dir / artifact::results, table);
    return rows;
}

struct PipelineOutcome {
    CorruptionRecord degraded;
    RestoreOutcome restored;
    std::vector<QualityReport> results;
};

inline PipelineOutcome cmd_all(const ExperimentConfig& cfg)
{
    PipelineOutcome out;
    out.degraded = cmd_degrade(cfg);
    cmd_estimate(cfg);
    out.restored = cmd_restore(cfg);
    out.results = cmd_evaluate(cfg);
    return out;
}

} // namespace svtv
