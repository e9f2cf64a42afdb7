/*
 * dnaprior - unsupervised single-image denoising behind a C interface.
 *
 * The core fits a small convolutional generator to one noisy observation
 * under a dual-domain objective (frequency-domain fidelity plus a
 * scale-normalised smoothed total-variation penalty) and returns the
 * generator's output as the reconstruction. A pixel-space deep-prior
 * baseline and a classical TV baseline run through the same job interface.
 *
 * All functions returning dna_status set a thread-local message readable
 * via dna_last_error() on failure. Handles are opaque; every *_create /
 * *_read / *_run output must be released with the matching *_free.
 */
#ifndef DNAPRIOR_H
#define DNAPRIOR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dna_status {
    DNA_OK = 0,
    DNA_ERR_INVALID_ARGUMENT = 1, /* bad value, unknown key, bad config   */
    DNA_ERR_DIMENSION = 2,        /* shape mismatch                       */
    DNA_ERR_CONTRACT = 3,         /* API misuse                           */
    DNA_ERR_NUMERIC = 4,          /* NaN/Inf encountered                  */
    DNA_ERR_FORMAT = 5,           /* unsupported or corrupt file          */
    DNA_ERR_IO = 6,               /* filesystem failure                   */
    DNA_ERR_NULL = 7,             /* null handle or output pointer        */
    DNA_ERR_INTERNAL = 8
} dna_status;

/* Real image, values nominally in [0,1], stored [channel][row][column]. */
typedef struct dna_image dna_image;
/* One denoising job: method selection plus every tunable. */
typedef struct dna_job dna_job;
/* Reconstruction, loss trace and configuration echo of a finished job. */
typedef struct dna_result dna_result;

const char* dna_version(void);
/* Message of the most recent failure on this thread ("" if none). */
const char* dna_last_error(void);

/* ---- images ---------------------------------------------------------- */

dna_status dna_image_create(int channels, int height, int width,
                            dna_image** out);
dna_status dna_image_clone(const dna_image* img, dna_image** out);
void dna_image_free(dna_image* img);

int dna_image_channels(const dna_image* img);
int dna_image_height(const dna_image* img);
int dna_image_width(const dna_image* img);

/* Borrowed pointer to channels*height*width doubles; valid until the image
 * is freed. */
double* dna_image_data(dna_image* img);
const double* dna_image_data_const(const dna_image* img);

/* PGM (P5, maxval 255) or PNG (8-bit gray/RGB), detected by magic bytes.
 * Pixels are scaled to [0,1]. Writing picks the format from the extension
 * (.pgm single channel, .png 1 or 3 channels) and quantises round-half-up;
 * a failed write never leaves a partial file. */
dna_status dna_image_read(const char* path, dna_image** out);
dna_status dna_image_write(const char* path, const dna_image* img);

/* Deterministic test image: kind is flat | step | circles | ramp. */
dna_status dna_image_phantom(const char* kind, int height, int width,
                             int channels, dna_image** out);

/* y = x + N(0, (sigma_8bit/255)^2), seeded; clip != 0 clamps y to [0,1]. */
dna_status dna_image_add_noise(const dna_image* img, double sigma_8bit,
                               uint64_t seed, int clip, dna_image** out);
dna_status dna_image_clip(const dna_image* img, dna_image** out);

/* 10*log10(peak^2/MSE); identical images yield +infinity. */
dna_status dna_psnr(const dna_image* a, const dna_image* b, double peak,
                    double* out_db);

/* ---- jobs -------------------------------------------------------------
 *
 * A new job carries the default configuration (method dna, alpha 1,
 * beta 1e-4, 3000 iterations, ...). Fields are addressed by key:
 *
 *   string: method                 dna | dip | tv
 *   real:   alpha beta gamma_spec gamma_tv z_noise_scale learning_rate
 *           adam_beta1 adam_beta2 adam_eps tv_lambda tv_step_size tv_gamma
 *   int:    depth base_channels kernel_size skip_channels z_channels
 *           network_seed iterations log_every training_seed tv_steps
 */

dna_status dna_job_create(dna_job** out);
void dna_job_free(dna_job* job);

dna_status dna_job_set_real(dna_job* job, const char* key, double value);
dna_status dna_job_set_int(dna_job* job, const char* key, long long value);
dna_status dna_job_set_string(dna_job* job, const char* key,
                              const char* value);

/* Replaces the job's configuration with the parsed JSON (same schema as
 * dna_job_config_json; absent fields keep their defaults). */
dna_status dna_job_load_json(dna_job* job, const char* json_text);

/* Complete effective configuration as JSON; free with dna_string_free. */
dna_status dna_job_config_json(const dna_job* job, char** out_json);

/* Runs the configured method on `noisy`. Deterministic: identical job and
 * image produce a bit-identical reconstruction. */
dna_status dna_job_run(const dna_job* job, const dna_image* noisy,
                       dna_result** out);

/* ---- results ----------------------------------------------------------- */

void dna_result_free(dna_result* result);

/* Copy of the reconstruction; caller frees it. */
dna_status dna_result_image(const dna_result* result, dna_image** out);

/* Loss trace rows (iteration, total, fidelity, regulariser). For dna these
 * are (L_total, L_IS, L_TV); for dip (MSE, MSE, 0); for tv the objective
 * split (total, ||x-y||^2, lambda*TV). */
int dna_result_trace_length(const dna_result* result);
dna_status dna_result_trace_row(const dna_result* result, int index,
                                int* iteration, double* total,
                                double* fidelity, double* regulariser);

double dna_result_elapsed_seconds(const dna_result* result);

/* Configuration snapshot the job ran with, as JSON. */
dna_status dna_result_config_json(const dna_result* result, char** out_json);

void dna_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* DNAPRIOR_H */
