#pragma once

#include <string>

#include "noise.hpp"
#include "optimizer.hpp"

namespace dna {

enum class Method { Dna, Dip, TvClassical };

Method method_from_string(const std::string& name);
const char* to_string(Method m);

// Parameters of the classical explicit-prior baseline.
struct TvClassicalConfig {
    double lambda = 0.1;
    int steps = 500;
    double step_size = 0.02;
    double gamma = 0.01;

    void validate() const;
};

// Everything one denoising job needs. Fields are addressed by the string
// keys used by the C API and the CLI; to_json produces the complete
// effective configuration that report files embed.
struct JobConfig {
    Method method = Method::Dna;
    ObjectiveConfig objective;
    NetworkConfig network;
    TrainConfig training;
    TvClassicalConfig tv;

    void set_real(const std::string& key, double value);
    void set_int(const std::string& key, long long value);
    void set_string(const std::string& key, const std::string& value);

    std::string to_json() const;
    static JobConfig from_json(const std::string& text);

    void validate() const;

    // Dispatches on `method`. For tv_classical the trace holds the objective
    // split (total, fidelity, weighted TV) every log_every steps.
    DenoiseResult run(const Image& noisy) const;
};

} // namespace dna
