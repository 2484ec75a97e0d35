#pragma once

#include "protofold/builtin_data.hpp"
#include "protofold/chain.hpp"
#include "protofold/common.hpp"
#include "protofold/forcefield.hpp"
#include "protofold/kcm.hpp"
#include "protofold/params.hpp"
#include "protofold/pdbio.hpp"
#include "protofold/solvation.hpp"
#include "protofold/spatial.hpp"
#include "protofold/templates.hpp"
#include "protofold/topology.hpp"

namespace protofold {

/// Templates shipped in data/templates.dat.
inline const TemplateLibrary& default_templates() {
  static const TemplateLibrary lib = TemplateLibrary::from_string(builtin::kTemplates);
  return lib;
}

/// Parameters shipped in data/params.dat.
inline const ParamSet& default_params() {
  static const ParamSet ps = ParamSet::from_string(builtin::kParams);
  return ps;
}

}  // namespace protofold
