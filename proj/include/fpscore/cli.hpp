#pragma once

#include "fpscore/scorer.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace fpscore {

// "ngram:<model-file>" or "remote:<url>".
std::unique_ptr<Scorer> make_scorer(const std::string& backend, unsigned workers);

// Entry point of the fpscore tool. Returns 0 on success, 1 when an operation
// fails and 2 for usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fpscore
