// Compares the serial reference attack fan-out against the OpenMP path on
// a synthetic workload and verifies they produce identical results.

#include <chrono>
#include <cstring>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tsadv/attack.hpp"

using namespace tsadv;

namespace {

double run_ms(const ForecastModel& model, const WindowedDataset& data,
              const AttackTargetSpec& spec, const AttackConfig& cfg, Exec exec,
              AttackResult& out) {
    auto t0 = std::chrono::steady_clock::now();
    out = attack_dataset(model, data, spec, cfg, exec);
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

bool identical(const AttackResult& a, const AttackResult& b) {
    if (a.windows.size() != b.windows.size()) return false;
    for (std::size_t i = 0; i < a.windows.size(); ++i) {
        const auto& wa = a.windows[i];
        const auto& wb = b.windows[i];
        if (wa.x_adv.data != wb.x_adv.data) return false;
        if (std::memcmp(&wa.adv_pred, &wb.adv_pred, sizeof(double)) != 0) return false;
        if (std::memcmp(&wa.final_loss, &wb.final_loss, sizeof(double)) != 0) return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t length = 1200;
    if (argc > 1) length = static_cast<std::size_t>(std::atoi(argv[1]));

    SynthSpec synth;
    synth.kind = SynthKind::mixture;
    synth.length = length;
    synth.features = 3;
    synth.noise_sigma = 0.05;
    synth.seed = 7;
    RawSeries raw = synth_series(synth);
    NormalizationMeta meta = fit_normalization(raw);
    WindowedDataset data = make_windows(apply_normalization(raw, meta), 5);
    data.normalization = meta;

    ModelConfig mc;
    mc.kind = ModelKind::gated_recurrent;
    mc.window = 5;
    mc.features = 3;
    mc.hidden = 16;
    mc.seed = 11;
    ForecastModel model(mc); // untrained weights; throughput only

    AttackTargetSpec spec;
    spec.kind = TargetKind::dta;
    spec.direction = +1;

#ifdef _OPENMP
    std::cout << "threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "threads: 1 (built without OpenMP)\n";
#endif
    std::cout << "windows: " << data.size() << "\n\n";
    std::cout << "method   serial_ms   parallel_ms   speedup   identical\n";

    for (AttackMethod method : {AttackMethod::fgsm, AttackMethod::pgd, AttackMethod::mapgd}) {
        AttackConfig cfg;
        cfg.method = method;
        cfg.epsilon = 0.1;
        cfg.n_iter = 40;

        AttackResult serial, parallel;
        double ts = run_ms(model, data, spec, cfg, Exec::serial, serial);
        double tp = run_ms(model, data, spec, cfg, Exec::parallel, parallel);
        std::printf("%-8s %9.1f   %11.1f   %7.2fx   %s\n", to_string(method).c_str(), ts, tp,
                    ts / tp, identical(serial, parallel) ? "yes" : "NO");
    }
    return 0;
}
