#include "jobconfig.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

namespace dna {

using nlohmann::json;

Method method_from_string(const std::string& name) {
    if (name == "dna")
        return Method::Dna;
    if (name == "dip")
        return Method::Dip;
    if (name == "tv" || name == "tv_classical")
        return Method::TvClassical;
    throw ConfigError("unknown method '" + name +
                      "' (expected dna, dip or tv)");
}

const char* to_string(Method m) {
    switch (m) {
    case Method::Dna:
        return "dna";
    case Method::Dip:
        return "dip";
    case Method::TvClassical:
        return "tv";
    }
    return "?";
}

void TvClassicalConfig::validate() const {
    if (!(lambda > 0.0))
        throw ConfigError("tv_classical: lambda must be > 0");
    if (steps < 1)
        throw ConfigError("tv_classical: steps must be >= 1");
    if (!(step_size > 0.0))
        throw ConfigError("tv_classical: step_size must be > 0");
    if (!(gamma > 0.0))
        throw ConfigError("tv_classical: gamma must be > 0");
}

void JobConfig::validate() const {
    objective.validate();
    network.validate();
    training.validate();
    tv.validate();
}

void JobConfig::set_real(const std::string& key, double value) {
    if (key == "alpha")
        objective.alpha = value;
    else if (key == "beta")
        objective.beta = value;
    else if (key == "gamma_spec")
        objective.gamma_spec = value;
    else if (key == "gamma_tv")
        objective.gamma_tv = value;
    else if (key == "z_noise_scale")
        network.z_noise_scale = value;
    else if (key == "learning_rate")
        training.learning_rate = value;
    else if (key == "adam_beta1")
        training.adam_beta1 = value;
    else if (key == "adam_beta2")
        training.adam_beta2 = value;
    else if (key == "adam_eps")
        training.adam_eps = value;
    else if (key == "tv_lambda")
        tv.lambda = value;
    else if (key == "tv_step_size")
        tv.step_size = value;
    else if (key == "tv_gamma")
        tv.gamma = value;
    else
        throw ConfigError("unknown real-valued config key '" + key + "'");
}

void JobConfig::set_int(const std::string& key, long long value) {
    if (key == "depth")
        network.depth = static_cast<int>(value);
    else if (key == "base_channels")
        network.base_channels = static_cast<int>(value);
    else if (key == "kernel_size")
        network.kernel_size = static_cast<int>(value);
    else if (key == "skip_channels")
        network.skip_channels = static_cast<int>(value);
    else if (key == "z_channels")
        network.z_channels = static_cast<int>(value);
    else if (key == "network_seed")
        network.seed = static_cast<std::uint64_t>(value);
    else if (key == "iterations")
        training.iterations = static_cast<int>(value);
    else if (key == "log_every")
        training.log_every = static_cast<int>(value);
    else if (key == "training_seed")
        training.seed = static_cast<std::uint64_t>(value);
    else if (key == "tv_steps")
        tv.steps = static_cast<int>(value);
    else
        throw ConfigError("unknown integer config key '" + key + "'");
}

void JobConfig::set_string(const std::string& key, const std::string& value) {
    if (key == "method")
        method = method_from_string(value);
    else
        throw ConfigError("unknown string config key '" + key + "'");
}

std::string JobConfig::to_json() const {
    json j;
    j["method"] = to_string(method);
    j["objective"] = {{"alpha", objective.alpha},
                      {"beta", objective.beta},
                      {"gamma_spec", objective.gamma_spec},
                      {"gamma_tv", objective.gamma_tv}};
    j["network"] = {{"depth", network.depth},
                    {"base_channels", network.base_channels},
                    {"kernel_size", network.kernel_size},
                    {"skip_channels", network.skip_channels},
                    {"z_channels", network.z_channels},
                    {"z_noise_scale", network.z_noise_scale},
                    {"seed", network.seed}};
    j["training"] = {{"iterations", training.iterations},
                     {"learning_rate", training.learning_rate},
                     {"adam_beta1", training.adam_beta1},
                     {"adam_beta2", training.adam_beta2},
                     {"adam_eps", training.adam_eps},
                     {"log_every", training.log_every},
                     {"seed", training.seed}};
    j["tv_classical"] = {{"lambda", tv.lambda},
                         {"steps", tv.steps},
                         {"step_size", tv.step_size},
                         {"gamma", tv.gamma}};
    return j.dump(2);
}

JobConfig JobConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid job config JSON: ") + e.what());
    }
    JobConfig cfg;
    try {
        if (j.contains("method"))
            cfg.method = method_from_string(j["method"].get<std::string>());
        if (j.contains("objective")) {
            const json& o = j["objective"];
            cfg.objective.alpha = o.value("alpha", cfg.objective.alpha);
            cfg.objective.beta = o.value("beta", cfg.objective.beta);
            cfg.objective.gamma_spec =
                o.value("gamma_spec", cfg.objective.gamma_spec);
            cfg.objective.gamma_tv = o.value("gamma_tv", cfg.objective.gamma_tv);
        }
        if (j.contains("network")) {
            const json& n = j["network"];
            cfg.network.depth = n.value("depth", cfg.network.depth);
            cfg.network.base_channels =
                n.value("base_channels", cfg.network.base_channels);
            cfg.network.kernel_size =
                n.value("kernel_size", cfg.network.kernel_size);
            cfg.network.skip_channels =
                n.value("skip_channels", cfg.network.skip_channels);
            cfg.network.z_channels = n.value("z_channels", cfg.network.z_channels);
            cfg.network.z_noise_scale =
                n.value("z_noise_scale", cfg.network.z_noise_scale);
            cfg.network.seed = n.value("seed", cfg.network.seed);
        }
        if (j.contains("training")) {
            const json& t = j["training"];
            cfg.training.iterations = t.value("iterations", cfg.training.iterations);
            cfg.training.learning_rate =
                t.value("learning_rate", cfg.training.learning_rate);
            cfg.training.adam_beta1 = t.value("adam_beta1", cfg.training.adam_beta1);
            cfg.training.adam_beta2 = t.value("adam_beta2", cfg.training.adam_beta2);
            cfg.training.adam_eps = t.value("adam_eps", cfg.training.adam_eps);
            cfg.training.log_every = t.value("log_every", cfg.training.log_every);
            cfg.training.seed = t.value("seed", cfg.training.seed);
        }
        if (j.contains("tv_classical")) {
            const json& t = j["tv_classical"];
            cfg.tv.lambda = t.value("lambda", cfg.tv.lambda);
            cfg.tv.steps = t.value("steps", cfg.tv.steps);
            cfg.tv.step_size = t.value("step_size", cfg.tv.step_size);
            cfg.tv.gamma = t.value("gamma", cfg.tv.gamma);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid job config value: ") + e.what());
    }
    return cfg;
}

DenoiseResult JobConfig::run(const Image& noisy) const {
    validate();
    switch (method) {
    case Method::Dna:
        return denoise(noisy, objective, network, training);
    case Method::Dip:
        return denoise_dip_baseline(noisy, network, training);
    case Method::TvClassical: {
        const auto start = std::chrono::steady_clock::now();
        DenoiseResult result;
        result.objective = objective;
        result.network = network;
        result.training = training;
        const int every = training.log_every;
        const int last = tv.steps;
        auto observer = [&result, every, last](int step, double total,
                                               double fidelity, double wtv) {
            if (step % every == 0 || step == last)
                result.loss_trace.push_back({step, total, fidelity, wtv});
        };
        result.xhat = tv_denoise_classical(noisy, tv.lambda, tv.steps,
                                           tv.step_size, tv.gamma, observer);
        result.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        return result;
    }
    }
    throw ConfigError("unreachable method");
}

} // namespace dna
