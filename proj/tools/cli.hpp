#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mflab::cli {

enum Exit : int { kOk = 0, kValidation = 1, kAssertion = 2 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mflab::cli
