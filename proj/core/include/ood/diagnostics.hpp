#pragma once

#include <functional>
#include <string_view>

namespace ood {

using WarningSink = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink (stderr by default) and returns
/// the previous one. Pass an empty function to restore the default.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

}  // namespace ood
