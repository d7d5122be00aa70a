#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sde {

/// Entry point of the `sde` command line tool. Returns 0 on success, 1 on
/// usage errors (help printed to `err`) and 2 on runtime errors.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sde
