#pragma once

#include <string>
#include <vector>

#include "topoderiv/problem.hpp"

namespace topoderiv {

/// Discretization and pipeline knobs. Everything has a workable default so a
/// config file only needs the model sections.
struct NumericsOptions {
    double h = 0.05;                ///< target mesh width for D
    int order = 2;                  ///< element order for state/adjoint solves
    double exterior_radius = 24.0;  ///< truncation radius R for corrector problems
    double exterior_h = 0.1;        ///< element width at the inclusion boundary
    double exterior_grading = 0.05; ///< element width near radius R, as a fraction of R
    std::vector<std::string> methods = {"amstutz", "averaged", "delfour"};
};

/// Everything a pipeline run needs, parsed from one problem description file.
struct RunSetup {
    ProblemSpec problem;
    PerturbationSpec perturbation;
    NumericsOptions numerics;
};

/// Parses a problem description file. Sections: [domain], [phases],
/// [boundary], [cost], [perturbation], and optional [numerics]. Throws
/// std::invalid_argument with "file:line:" prefixed messages.
RunSetup parse_config_file(const std::string& path);

/// Same parser on in-memory text; `name` is used in error messages.
RunSetup parse_config_text(const std::string& text, const std::string& name = "<config>");

}  // namespace topoderiv
