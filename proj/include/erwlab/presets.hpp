#pragma once

#include <map>
#include <string>
#include <vector>

#include "erwlab/model.hpp"

namespace erwlab {

/// Preset parameters as text; numbers, expressions ("x^2") and comma lists ("1,2").
using Params = std::map<std::string, std::string>;

struct PresetInfo {
    std::string name;
    std::string params;    // accepted keys with defaults
    std::string citation;  // which model construction the preset reproduces
    std::string summary;
};

/// Stable, alphabetical-by-registration listing.
const std::vector<PresetInfo>& list_presets();

/// Throws Error{UnknownPreset|ParameterOutOfRange}.
ModelSpec build_preset(const std::string& name, const Params& params = {});

}  // namespace erwlab
