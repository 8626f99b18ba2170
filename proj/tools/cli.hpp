#pragma once

namespace genens::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 1;
inline constexpr int kRuntime = 2;
inline constexpr int kFlagged = 3;

int run(int argc, char** argv);

}  // namespace genens::cli
