#ifndef STOCHSIM_TOOLS_PRESETS_HPP
#define STOCHSIM_TOOLS_PRESETS_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace stochsim::presets {

struct PresetOptions {
    std::string name;     // fig2 | fig3 | fig4 | fig5 | table1
    std::string scale;    // desk | paper
    std::uint64_t seed = 0;
    std::string outdir;
    std::optional<std::string> csv;    // table1 input; synthesized when absent
    std::optional<std::string> column; // table1 column name
};

// Runs one preset pipeline end to end, writing plot-ready CSV files into
// outdir. The worker pool honors the STOCHSIM_THREADS environment variable.
void run_preset(const PresetOptions &opts);

} // namespace stochsim::presets

#endif
