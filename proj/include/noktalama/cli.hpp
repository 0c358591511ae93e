#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "noktalama/config.hpp"
#include "noktalama/reconstruction.hpp"
#include "noktalama/tagger.hpp"
#include "noktalama/tokenizer.hpp"

namespace noktalama {

/// Strips, tokenizes and windows one paragraph, tags every window and
/// renders the merged labels. Units the vocabulary cannot cover are
/// rendered from their source text.
std::string correct_paragraph(std::string_view paragraph, const Vocab& vocab,
                              const TaggerBackend& backend, std::size_t window,
                              const RenderPolicy& policy = {},
                              ReconstructMode mode = ReconstructMode::Lenient);

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line; args[0] is the program name. Never throws.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace cli
}  // namespace noktalama
