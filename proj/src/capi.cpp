#include "dnaprior.h"

#include <cstring>
#include <string>

#include "image_io.hpp"
#include "jobconfig.hpp"

struct dna_image {
    dna::Image img;
};

struct dna_job {
    dna::JobConfig cfg;
};

struct dna_result {
    dna::DenoiseResult res;
    dna::JobConfig cfg; // the exact configuration the job ran with
};

namespace {

thread_local std::string t_last_error;

template <typename Fn> dna_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return DNA_OK;
    } catch (const dna::DimensionError& e) {
        t_last_error = e.what();
        return DNA_ERR_DIMENSION;
    } catch (const dna::ContractError& e) {
        t_last_error = e.what();
        return DNA_ERR_CONTRACT;
    } catch (const dna::NumericError& e) {
        t_last_error = e.what();
        return DNA_ERR_NUMERIC;
    } catch (const dna::FormatError& e) {
        t_last_error = e.what();
        return DNA_ERR_FORMAT;
    } catch (const dna::IoError& e) {
        t_last_error = e.what();
        return DNA_ERR_IO;
    } catch (const dna::ConfigError& e) {
        t_last_error = e.what();
        return DNA_ERR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return DNA_ERR_INTERNAL;
    }
}

dna_status null_error(const char* what) {
    t_last_error = std::string(what) + " is null";
    return DNA_ERR_NULL;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

} // namespace

extern "C" {

const char* dna_version(void) { return "0.1.0"; }

const char* dna_last_error(void) { return t_last_error.c_str(); }

dna_status dna_image_create(int channels, int height, int width,
                            dna_image** out) {
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_image{dna::Image(channels, height, width)}; });
}

dna_status dna_image_clone(const dna_image* img, dna_image** out) {
    if (!img)
        return null_error("image");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_image{img->img}; });
}

void dna_image_free(dna_image* img) { delete img; }

int dna_image_channels(const dna_image* img) {
    return img ? img->img.channels : 0;
}
int dna_image_height(const dna_image* img) { return img ? img->img.height : 0; }
int dna_image_width(const dna_image* img) { return img ? img->img.width : 0; }

double* dna_image_data(dna_image* img) {
    return img ? img->img.data.data() : nullptr;
}
const double* dna_image_data_const(const dna_image* img) {
    return img ? img->img.data.data() : nullptr;
}

dna_status dna_image_read(const char* path, dna_image** out) {
    if (!path)
        return null_error("path");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_image{dna::read_image(path)}; });
}

dna_status dna_image_write(const char* path, const dna_image* img) {
    if (!path)
        return null_error("path");
    if (!img)
        return null_error("image");
    return guarded([&] { dna::write_image(path, img->img); });
}

dna_status dna_image_phantom(const char* kind, int height, int width,
                             int channels, dna_image** out) {
    if (!kind)
        return null_error("kind");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] {
        *out = new dna_image{dna::make_phantom(dna::phantom_kind_from_string(kind),
                                               height, width, channels)};
    });
}

dna_status dna_image_add_noise(const dna_image* img, double sigma_8bit,
                               uint64_t seed, int clip, dna_image** out) {
    if (!img)
        return null_error("image");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] {
        dna::NoiseSpec spec{sigma_8bit, seed};
        *out = new dna_image{dna::add_gaussian_noise(img->img, spec, clip != 0)};
    });
}

dna_status dna_image_clip(const dna_image* img, dna_image** out) {
    if (!img)
        return null_error("image");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_image{dna::clip01(img->img)}; });
}

dna_status dna_psnr(const dna_image* a, const dna_image* b, double peak,
                    double* out_db) {
    if (!a || !b)
        return null_error("image");
    if (!out_db)
        return null_error("out_db");
    return guarded([&] { *out_db = dna::psnr(a->img, b->img, peak); });
}

dna_status dna_job_create(dna_job** out) {
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_job{}; });
}

void dna_job_free(dna_job* job) { delete job; }

dna_status dna_job_set_real(dna_job* job, const char* key, double value) {
    if (!job)
        return null_error("job");
    if (!key)
        return null_error("key");
    return guarded([&] { job->cfg.set_real(key, value); });
}

dna_status dna_job_set_int(dna_job* job, const char* key, long long value) {
    if (!job)
        return null_error("job");
    if (!key)
        return null_error("key");
    return guarded([&] { job->cfg.set_int(key, value); });
}

dna_status dna_job_set_string(dna_job* job, const char* key,
                              const char* value) {
    if (!job)
        return null_error("job");
    if (!key || !value)
        return null_error("key/value");
    return guarded([&] { job->cfg.set_string(key, value); });
}

dna_status dna_job_load_json(dna_job* job, const char* json_text) {
    if (!job)
        return null_error("job");
    if (!json_text)
        return null_error("json_text");
    return guarded([&] { job->cfg = dna::JobConfig::from_json(json_text); });
}

dna_status dna_job_config_json(const dna_job* job, char** out_json) {
    if (!job)
        return null_error("job");
    if (!out_json)
        return null_error("out_json");
    *out_json = nullptr;
    return guarded([&] { *out_json = dup_string(job->cfg.to_json()); });
}

dna_status dna_job_run(const dna_job* job, const dna_image* noisy,
                       dna_result** out) {
    if (!job)
        return null_error("job");
    if (!noisy)
        return null_error("noisy");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded(
        [&] { *out = new dna_result{job->cfg.run(noisy->img), job->cfg}; });
}

void dna_result_free(dna_result* result) { delete result; }

dna_status dna_result_image(const dna_result* result, dna_image** out) {
    if (!result)
        return null_error("result");
    if (!out)
        return null_error("out");
    *out = nullptr;
    return guarded([&] { *out = new dna_image{result->res.xhat}; });
}

int dna_result_trace_length(const dna_result* result) {
    return result ? static_cast<int>(result->res.loss_trace.size()) : 0;
}

dna_status dna_result_trace_row(const dna_result* result, int index,
                                int* iteration, double* total,
                                double* fidelity, double* regulariser) {
    if (!result)
        return null_error("result");
    if (index < 0 ||
        index >= static_cast<int>(result->res.loss_trace.size())) {
        t_last_error = "trace index out of range";
        return DNA_ERR_INVALID_ARGUMENT;
    }
    const dna::TraceRow& row =
        result->res.loss_trace[static_cast<std::size_t>(index)];
    if (iteration)
        *iteration = row.iteration;
    if (total)
        *total = row.total;
    if (fidelity)
        *fidelity = row.fidelity;
    if (regulariser)
        *regulariser = row.regulariser;
    return DNA_OK;
}

double dna_result_elapsed_seconds(const dna_result* result) {
    return result ? result->res.elapsed_seconds : 0.0;
}

dna_status dna_result_config_json(const dna_result* result, char** out_json) {
    if (!result)
        return null_error("result");
    if (!out_json)
        return null_error("out_json");
    *out_json = nullptr;
    return guarded([&] { *out_json = dup_string(result->cfg.to_json()); });
}

void dna_string_free(char* text) { delete[] text; }

} // extern "C"
