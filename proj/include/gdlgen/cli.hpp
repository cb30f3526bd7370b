#pragma once

#include <ostream>

namespace gdlgen {

// Entry point for the `gdlgen` tool. Exit codes: 0 success, 1 runtime or
// backend failure, 2 input or parse error.
//
//   gdlgen grammar-extract <grammar> <description> [--check <minimal-grammar>]
//   gdlgen prefix <grammar> <description>
//   gdlgen generate --config C --dataset D --method gdg|ggdg|random --seed N --out DIR [--jobs N]
//   gdlgen evaluate --run DIR [--run DIR ...] --dataset D [--grammar G] [--concepts DIR]
//                   [--functional-cmd CMD] [--compile-cmd CMD] [--timeout-s N]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gdlgen
