// Command-line front end for the dnaprior shared library. Subcommands:
//   denoise  run one method on one image (optionally degrading it first)
//   bench    grid of images x sigmas x methods -> CSV + markdown report
//   noise    add seeded Gaussian noise to an image
//   psnr     print the PSNR between two images
//   phantom  write a deterministic test image
//
// Everything goes through the public C API; identical invocations produce
// byte-identical outputs (runtime measurement is off unless --timings wall).

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dnaprior.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- small helpers ----------------------------------------------------------

struct ImageDeleter {
    void operator()(dna_image* p) const { dna_image_free(p); }
};
struct JobDeleter {
    void operator()(dna_job* p) const { dna_job_free(p); }
};
struct ResultDeleter {
    void operator()(dna_result* p) const { dna_result_free(p); }
};
using ImagePtr = std::unique_ptr<dna_image, ImageDeleter>;
using JobPtr = std::unique_ptr<dna_job, JobDeleter>;
using ResultPtr = std::unique_ptr<dna_result, ResultDeleter>;

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(dna_status status, const std::string& what) {
    if (status != DNA_OK)
        throw CliError(what + ": " + dna_last_error());
}

ImagePtr read_image(const std::string& path) {
    dna_image* img = nullptr;
    check(dna_image_read(path.c_str(), &img), "reading '" + path + "'");
    return ImagePtr(img);
}

void write_image(const std::string& path, const dna_image* img) {
    check(dna_image_write(path.c_str(), img), "writing '" + path + "'");
}

std::string config_json(const dna_job* job) {
    char* text = nullptr;
    check(dna_job_config_json(job, &text), "serialising config");
    std::string out(text);
    dna_string_free(text);
    return out;
}

// Atomic text write so report files are never left half-written.
void write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CliError("cannot create '" + path + "'");
        out << content;
        if (!out)
            throw CliError("failed writing '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw CliError("cannot move temporary file onto '" + path + "'");
}

std::string format_db(double db) {
    if (std::isinf(db))
        return db > 0 ? "inf" : "-inf";
    if (std::isnan(db))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", db);
    return buf;
}

std::string format_runtime(double seconds, bool wall) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", wall ? seconds : 0.0);
    return buf;
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// FNV-1a over strings/ints; derives per-cell bench seeds from
// (master seed, image path, sigma, method) so every cell is independent.
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}
std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// ---- shared option plumbing ---------------------------------------------------

struct JobOptions {
    std::string config_path;
    std::string method;
    double alpha = 0, beta = 0, gamma_spec = 0, gamma_tv = 0, lr = 0;
    long long iters = 0, log_every = 0;
    long long depth = 0, base_channels = 0, kernel_size = 0, skip_channels = 0,
              z_channels = 0;
    double z_scale = 0;
    double tv_lambda = 0, tv_step_size = 0, tv_gamma = 0;
    long long tv_steps = 0;
    std::uint64_t seed = 0;

    CLI::App* app = nullptr;

    void add_to(CLI::App& cmd) {
        app = &cmd;
        cmd.add_option("--config", config_path,
                       "job configuration JSON (same schema as the metrics "
                       "config echo); flags override it");
        cmd.add_option("--method", method, "dna | dip | tv")
            ->check(CLI::IsMember({"dna", "dip", "tv"}));
        cmd.add_option("--alpha", alpha, "weight of the spectral fidelity term");
        cmd.add_option("--beta", beta, "weight of the TV term");
        cmd.add_option("--gamma-spec", gamma_spec,
                       "stabiliser of the spectral loss denominator");
        cmd.add_option("--gamma-tv", gamma_tv,
                       "TV smoothing / normalisation stabiliser");
        cmd.add_option("--iters", iters, "training iterations");
        cmd.add_option("--lr", lr, "Adam learning rate");
        cmd.add_option("--log-every", log_every, "loss trace interval");
        cmd.add_option("--seed", seed, "master seed (network + training)");
        cmd.add_option("--depth", depth, "encoder/decoder stages");
        cmd.add_option("--base-channels", base_channels, "conv width");
        cmd.add_option("--kernel-size", kernel_size, "odd conv kernel size");
        cmd.add_option("--skip-channels", skip_channels, "skip conv width");
        cmd.add_option("--z-channels", z_channels, "input tensor channels");
        cmd.add_option("--z-scale", z_scale, "input tensor amplitude");
        cmd.add_option("--tv-lambda", tv_lambda, "classical TV weight");
        cmd.add_option("--tv-steps", tv_steps, "classical TV steps");
        cmd.add_option("--tv-step-size", tv_step_size, "classical TV step size");
        cmd.add_option("--tv-gamma", tv_gamma, "classical TV smoothing");
    }

    bool passed(const char* flag) const { return app->count(flag) > 0; }

    void apply(dna_job* job) const {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in)
                throw CliError("cannot open config '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            check(dna_job_load_json(job, ss.str().c_str()),
                  "loading '" + config_path + "'");
        }
        if (passed("--method"))
            check(dna_job_set_string(job, "method", method.c_str()), "--method");
        if (passed("--alpha"))
            check(dna_job_set_real(job, "alpha", alpha), "--alpha");
        if (passed("--beta"))
            check(dna_job_set_real(job, "beta", beta), "--beta");
        if (passed("--gamma-spec"))
            check(dna_job_set_real(job, "gamma_spec", gamma_spec), "--gamma-spec");
        if (passed("--gamma-tv"))
            check(dna_job_set_real(job, "gamma_tv", gamma_tv), "--gamma-tv");
        if (passed("--iters"))
            check(dna_job_set_int(job, "iterations", iters), "--iters");
        if (passed("--lr"))
            check(dna_job_set_real(job, "learning_rate", lr), "--lr");
        if (passed("--log-every"))
            check(dna_job_set_int(job, "log_every", log_every), "--log-every");
        if (passed("--seed")) {
            check(dna_job_set_int(job, "network_seed",
                                  static_cast<long long>(seed)),
                  "--seed");
            check(dna_job_set_int(job, "training_seed",
                                  static_cast<long long>(seed)),
                  "--seed");
        }
        if (passed("--depth"))
            check(dna_job_set_int(job, "depth", depth), "--depth");
        if (passed("--base-channels"))
            check(dna_job_set_int(job, "base_channels", base_channels),
                  "--base-channels");
        if (passed("--kernel-size"))
            check(dna_job_set_int(job, "kernel_size", kernel_size),
                  "--kernel-size");
        if (passed("--skip-channels"))
            check(dna_job_set_int(job, "skip_channels", skip_channels),
                  "--skip-channels");
        if (passed("--z-channels"))
            check(dna_job_set_int(job, "z_channels", z_channels), "--z-channels");
        if (passed("--z-scale"))
            check(dna_job_set_real(job, "z_noise_scale", z_scale), "--z-scale");
        if (passed("--tv-lambda"))
            check(dna_job_set_real(job, "tv_lambda", tv_lambda), "--tv-lambda");
        if (passed("--tv-steps"))
            check(dna_job_set_int(job, "tv_steps", tv_steps), "--tv-steps");
        if (passed("--tv-step-size"))
            check(dna_job_set_real(job, "tv_step_size", tv_step_size),
                  "--tv-step-size");
        if (passed("--tv-gamma"))
            check(dna_job_set_real(job, "tv_gamma", tv_gamma), "--tv-gamma");
    }
};

// ---- denoise ------------------------------------------------------------------

struct DenoiseArgs {
    std::string input, output, clean_path, trace_path, metrics_path;
    double sigma = 0;
    std::uint64_t noise_seed = 0;
    bool noise_seed_set = false;
    bool clip = false;
    std::string timings = "none";
    JobOptions job;
};

int cmd_denoise(const DenoiseArgs& args) {
    JobPtr job([] {
        dna_job* j = nullptr;
        check(dna_job_create(&j), "creating job");
        return j;
    }());
    args.job.apply(job.get());

    ImagePtr input = read_image(args.input);
    ImagePtr noisy;
    const bool add_noise = args.job.passed("--sigma");
    std::uint64_t noise_seed = args.noise_seed_set
                                   ? args.noise_seed
                                   : fnv1a("noise", fnv1a_u64(args.job.seed,
                                                              0xCBF29CE484222325ULL));
    if (add_noise) {
        dna_image* n = nullptr;
        check(dna_image_add_noise(input.get(), args.sigma, noise_seed,
                                  args.clip ? 1 : 0, &n),
              "adding noise");
        noisy.reset(n);
    }
    const dna_image* observation = add_noise ? noisy.get() : input.get();

    dna_result* raw = nullptr;
    check(dna_job_run(job.get(), observation, &raw), "denoising");
    ResultPtr result(raw);

    dna_image* out_raw = nullptr;
    check(dna_result_image(result.get(), &out_raw), "extracting result");
    ImagePtr denoised(out_raw);
    write_image(args.output, denoised.get());

    if (!args.trace_path.empty()) {
        std::ostringstream csv;
        csv << "iteration,l_total,l_is,l_tv\n";
        const int n = dna_result_trace_length(result.get());
        for (int i = 0; i < n; ++i) {
            int it = 0;
            double total = 0, fid = 0, reg = 0;
            check(dna_result_trace_row(result.get(), i, &it, &total, &fid, &reg),
                  "reading trace");
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g\n", it, total,
                          fid, reg);
            csv << buf;
        }
        write_text(args.trace_path, csv.str());
    }

    if (!args.metrics_path.empty()) {
        json m;
        m["input"] = args.input;
        m["output"] = args.output;
        if (add_noise) {
            m["sigma"] = args.sigma;
            m["noise_seed"] = noise_seed;
            m["clip"] = args.clip;
        }
        if (!args.clean_path.empty()) {
            ImagePtr clean = read_image(args.clean_path);
            double db = 0;
            check(dna_psnr(denoised.get(), clean.get(), 1.0, &db),
                  "psnr(denoised, clean)");
            m["psnr_denoised"] = format_db(db);
            check(dna_psnr(observation, clean.get(), 1.0, &db),
                  "psnr(noisy, clean)");
            m["psnr_noisy"] = format_db(db);
        }
        const int n = dna_result_trace_length(result.get());
        if (n > 0) {
            int it = 0;
            double total = 0, fid = 0, reg = 0;
            check(dna_result_trace_row(result.get(), n - 1, &it, &total, &fid,
                                       &reg),
                  "reading trace");
            m["losses"] = {{"iteration", it},
                           {"total", total},
                           {"fidelity", fid},
                           {"regulariser", reg}};
        }
        m["runtime_s"] = format_runtime(dna_result_elapsed_seconds(result.get()),
                                        args.timings == "wall");
        m["config"] = json::parse(config_json(job.get()));
        write_text(args.metrics_path, m.dump(2) + "\n");
    }
    return 0;
}

// ---- bench ----------------------------------------------------------------------

struct BenchArgs {
    std::string dir;
    std::vector<double> sigmas{15, 25, 50};
    std::vector<std::string> methods{"dna", "dip", "tv"};
    std::vector<std::uint64_t> seeds{0};
    std::string csv_path, markdown_path;
    int jobs = 1;
    bool clip = false;
    std::string timings = "none";
    JobOptions job;
};

struct BenchCell {
    std::string relpath;
    std::string modality;
    double sigma = 0;
    std::string method;
    std::uint64_t master_seed = 0;
    // results
    double psnr_db = 0;
    double runtime_s = 0;
    bool ok = false;
    std::string error;
};

void run_bench_cell(const BenchArgs& args, const fs::path& root,
                    BenchCell& cell) {
    try {
        ImagePtr clean = read_image((root / cell.relpath).string());
        std::uint64_t h = fnv1a_u64(cell.master_seed, 0xCBF29CE484222325ULL);
        h = fnv1a(cell.relpath, h);
        h = fnv1a(format_g(cell.sigma), h);
        h = fnv1a(cell.method, h);

        dna_image* noisy_raw = nullptr;
        check(dna_image_add_noise(clean.get(), cell.sigma, fnv1a("noise", h),
                                  args.clip ? 1 : 0, &noisy_raw),
              "adding noise");
        ImagePtr noisy(noisy_raw);

        JobPtr job([] {
            dna_job* j = nullptr;
            check(dna_job_create(&j), "creating job");
            return j;
        }());
        args.job.apply(job.get());
        check(dna_job_set_string(job.get(), "method", cell.method.c_str()),
              "method");
        check(dna_job_set_int(job.get(), "network_seed",
                              static_cast<long long>(h)),
              "network_seed");
        check(dna_job_set_int(job.get(), "training_seed",
                              static_cast<long long>(h)),
              "training_seed");

        dna_result* raw = nullptr;
        check(dna_job_run(job.get(), noisy.get(), &raw), "denoising");
        ResultPtr result(raw);
        dna_image* xhat_raw = nullptr;
        check(dna_result_image(result.get(), &xhat_raw), "extracting result");
        ImagePtr xhat(xhat_raw);
        double db = 0;
        check(dna_psnr(xhat.get(), clean.get(), 1.0, &db), "psnr");
        cell.psnr_db = db;
        cell.runtime_s = dna_result_elapsed_seconds(result.get());
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        cell.psnr_db = std::nan("");
    }
}

std::string bench_markdown(const BenchArgs& args,
                           const std::vector<BenchCell>& cells) {
    // rows keyed by (image, sigma), method columns, mean over seeds
    std::ostringstream md;
    md << "| image | sigma |";
    for (const auto& m : args.methods)
        md << " " << m << " |";
    md << "\n|---|---:|";
    for (std::size_t i = 0; i < args.methods.size(); ++i)
        md << "---:|";
    md << "\n";

    std::vector<std::pair<std::string, double>> keys;
    for (const auto& c : cells) {
        std::pair<std::string, double> key{c.relpath, c.sigma};
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            keys.push_back(key);
    }
    for (const auto& [rel, sigma] : keys) {
        std::vector<double> means;
        for (const auto& m : args.methods) {
            double sum = 0;
            int n = 0;
            for (const auto& c : cells)
                if (c.relpath == rel && c.sigma == sigma && c.method == m &&
                    c.ok) {
                    sum += c.psnr_db;
                    ++n;
                }
            means.push_back(n ? sum / n : std::nan(""));
        }
        double best = -1e300;
        for (double v : means)
            if (!std::isnan(v))
                best = std::max(best, v);
        md << "| " << rel << " | " << format_g(sigma) << " |";
        for (double v : means) {
            const std::string s =
                std::isnan(v) ? "nan"
                              : (std::isinf(v) ? "inf"
                                               : [v] {
                                                     char b[32];
                                                     std::snprintf(b, sizeof(b),
                                                                   "%.2f", v);
                                                     return std::string(b);
                                                 }());
            if (!std::isnan(v) && v == best)
                md << " **" << s << "** |";
            else
                md << " " << s << " |";
        }
        md << "\n";
    }
    return md.str();
}

int cmd_bench(const BenchArgs& args) {
    const fs::path root(args.dir);
    if (!fs::is_directory(root)) {
        std::cerr << "error: '" << args.dir << "' is not a directory\n";
        return 1;
    }
    std::vector<std::string> images;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pgm" || ext == ".png")
            images.push_back(fs::relative(entry.path(), root).generic_string());
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) {
        std::cerr << "error: no images found in '" << args.dir << "'\n";
        return 1;
    }

    std::vector<BenchCell> cells;
    for (const auto& rel : images)
        for (double sigma : args.sigmas)
            for (const auto& method : args.methods)
                for (std::uint64_t seed : args.seeds) {
                    BenchCell c;
                    c.relpath = rel;
                    const fs::path p(rel);
                    c.modality = p.has_parent_path()
                                     ? p.parent_path().begin()->string()
                                     : "-";
                    c.sigma = sigma;
                    c.method = method;
                    c.master_seed = seed;
                    cells.push_back(std::move(c));
                }

    const int jobs = std::max(1, args.jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size())
                return;
            run_bench_cell(args, root, cells[i]);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    const bool wall = args.timings == "wall";
    std::ostringstream csv;
    csv << "image,modality,sigma,method,psnr_db,runtime_s,seed\n";
    for (const auto& c : cells) {
        csv << c.relpath << "," << c.modality << "," << format_g(c.sigma) << ","
            << c.method << "," << (c.ok ? format_db(c.psnr_db) : "nan") << ","
            << format_runtime(c.runtime_s, wall) << "," << c.master_seed
            << "\n";
    }
    if (!args.csv_path.empty())
        write_text(args.csv_path, csv.str());
    if (!args.markdown_path.empty())
        write_text(args.markdown_path, bench_markdown(args, cells));
    if (args.csv_path.empty() && args.markdown_path.empty())
        std::cout << csv.str();

    int failures = 0;
    for (const auto& c : cells)
        if (!c.ok) {
            ++failures;
            std::cerr << "cell failed: " << c.relpath << " sigma "
                      << format_g(c.sigma) << " " << c.method << " seed "
                      << c.master_seed << ": " << c.error << "\n";
        }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-domain unsupervised single-image denoiser"};
    app.require_subcommand(1);

    // denoise
    DenoiseArgs dn;
    CLI::App* denoise =
        app.add_subcommand("denoise", "denoise one image with dna, dip or tv");
    denoise->add_option("--input", dn.input, "input image (.pgm/.png)")
        ->required();
    denoise->add_option("--output", dn.output, "output image path")->required();
    denoise->add_option("--sigma", dn.sigma,
                        "degrade the input with this 8-bit-scale noise first");
    denoise->add_option("--noise-seed", dn.noise_seed, "noise seed")
        ->needs("--sigma");
    denoise->add_flag("--clip", dn.clip, "clamp the noisy image to [0,1]");
    denoise->add_option("--clean", dn.clean_path,
                        "clean reference for PSNR metrics");
    denoise->add_option("--trace", dn.trace_path, "write the loss trace CSV");
    denoise->add_option("--metrics", dn.metrics_path, "write metrics JSON");
    denoise->add_option("--timings", dn.timings, "wall | none (default none)")
        ->check(CLI::IsMember({"wall", "none"}));
    dn.job.add_to(*denoise);

    // bench
    BenchArgs bn;
    CLI::App* bench = app.add_subcommand(
        "bench", "PSNR grid over a directory of clean images");
    bench->add_option("--dir", bn.dir, "directory of clean images")->required();
    bench->add_option("--sigmas", bn.sigmas, "noise levels (default 15 25 50)")
        ->delimiter(',');
    bench->add_option("--methods", bn.methods, "methods (default dna,dip,tv)")
        ->delimiter(',')
        ->check(CLI::IsMember({"dna", "dip", "tv"}));
    bench->add_option("--seeds", bn.seeds, "master seeds (default 0)")
        ->delimiter(',');
    bench->add_option("--csv", bn.csv_path, "CSV report path");
    bench->add_option("--markdown", bn.markdown_path, "markdown report path");
    bench->add_option("--jobs", bn.jobs, "parallel jobs (default 1)");
    bench->add_flag("--clip", bn.clip, "clamp noisy images to [0,1]");
    bench->add_option("--timings", bn.timings, "wall | none (default none)")
        ->check(CLI::IsMember({"wall", "none"}));
    bn.job.add_to(*bench);

    // noise
    std::string in_path, out_path;
    double sigma = 25;
    std::uint64_t seed = 0;
    bool clip = false;
    CLI::App* noise =
        app.add_subcommand("noise", "add seeded Gaussian noise to an image");
    noise->add_option("--input", in_path, "input image")->required();
    noise->add_option("--output", out_path, "output image")->required();
    noise->add_option("--sigma", sigma, "8-bit-scale standard deviation")
        ->required();
    noise->add_option("--seed", seed, "noise seed");
    noise->add_flag("--clip", clip, "clamp to [0,1]");

    // psnr
    std::string path_a, path_b;
    double peak = 1.0;
    CLI::App* psnr = app.add_subcommand("psnr", "print PSNR(a, b) in dB");
    psnr->add_option("a", path_a, "first image")->required();
    psnr->add_option("b", path_b, "second image")->required();
    psnr->add_option("--peak", peak, "peak value (default 1.0)");

    // phantom
    std::string kind = "circles", phantom_out;
    int ph_h = 64, ph_w = 64, ph_c = 1;
    CLI::App* phantom =
        app.add_subcommand("phantom", "write a deterministic test image");
    phantom->add_option("--kind", kind, "flat | step | circles | ramp");
    phantom->add_option("--height", ph_h, "height (default 64)");
    phantom->add_option("--width", ph_w, "width (default 64)");
    phantom->add_option("--channels", ph_c, "channels (default 1)");
    phantom->add_option("--output", phantom_out, "output image")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (denoise->parsed()) {
            dn.noise_seed_set = denoise->count("--noise-seed") > 0;
            return cmd_denoise(dn);
        }
        if (bench->parsed())
            return cmd_bench(bn);
        if (noise->parsed()) {
            ImagePtr img = read_image(in_path);
            dna_image* noisy = nullptr;
            check(dna_image_add_noise(img.get(), sigma, seed, clip ? 1 : 0,
                                      &noisy),
                  "adding noise");
            ImagePtr out(noisy);
            write_image(out_path, out.get());
            return 0;
        }
        if (psnr->parsed()) {
            ImagePtr a = read_image(path_a);
            ImagePtr b = read_image(path_b);
            double db = 0;
            check(dna_psnr(a.get(), b.get(), peak, &db), "psnr");
            std::cout << format_db(db) << "\n";
            return 0;
        }
        if (phantom->parsed()) {
            dna_image* img = nullptr;
            check(dna_image_phantom(kind.c_str(), ph_h, ph_w, ph_c, &img),
                  "phantom");
            ImagePtr out(img);
            write_image(phantom_out, out.get());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
