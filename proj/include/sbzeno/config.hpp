// config.hpp: run configuration: sectioned key = value text
//
//     # comment
//     [model]
//     s = 1
//     alpha = 0.05
//
// Every key has a default; unknown sections or keys are rejected. Lists are comma
// separated. Overrides use the dotted form "model.alpha=0.8".

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbzeno/errors.hpp"
#include "sbzeno/model.hpp"
#include "sbzeno/oracle.hpp"
#include "sbzeno/tdvp.hpp"
#include "sbzeno/zeno.hpp"

namespace sbzeno {

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

struct RunConfig {
    SpectralDensity sd;
    double delta{0.1};
    std::size_t modes{2000};

    std::size_t chain_length{0}; // 0 = automatic
    double chain_horizon{0.0};   // horizon for the automatic rule, 0 = from the run
    std::size_t min_chain_length{12};
    double displacement_tol{0.01};
    std::size_t max_chain_length{200};
    bool chain_double{false};

    MpsConfig mps;
    TdvpConfig tdvp;
    InitialKind initial{InitialKind::BareBath};

    double evolve_time{30.0};
    std::size_t record_every{1};
    bool occupations{true};
    bool star_occupations{false};
    std::string checkpoint; // file name inside the output directory, empty = none

    Scheme scheme{Scheme::WholeSystem};
    double tau{0.0};                   // single interval (used when both grids are empty)
    std::vector<double> tau_grid;
    std::vector<double> delta_tau_grid; // grid in units of 1/Delta
    std::size_t measurements{0};
    bool horizon_cap{true};
    double rel_band{0.02};
    bool traces{false};
    std::size_t trace_every{1};

    std::size_t verify_chain_length{8};
    DenseSystemConfig verify_dense{6, 6, 2000000};
    std::size_t verify_bond_dim{8};
    double verify_time{20.0};
    double verify_tol{1e-3};

    std::string out_dir{"out"};
    bool deterministic{true};
    std::size_t threads{1};

    /// Checks every module precondition; throws ConfigError.
    void validate() const;

    /// Intervals of the zeno protocol in time units, sorted.
    std::vector<double> tau_values() const;

    SweepSetup sweep_setup() const;
    /// Chain length used for a run of length `horizon`.
    std::size_t resolved_chain_length(double horizon) const;
};

/// Parse config text on top of `base`. `origin` prefixes error messages.
RunConfig parse_config(const std::string& text, const RunConfig& base = {}, const std::string& origin = "config");
RunConfig load_config(const std::string& path, const RunConfig& base = {});

/// Apply "section.key=value".
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Value of one key in its text form.
std::string config_value(const RunConfig& cfg, const std::string& dotted_key);
std::vector<std::string> config_keys();

/// Full resolved config in parseable form.
std::string to_text(const RunConfig& cfg);

/// The resolved config as "# "-prefixed comment lines.
void write_config_header(std::ostream& os, const RunConfig& cfg);

} // namespace sbzeno
