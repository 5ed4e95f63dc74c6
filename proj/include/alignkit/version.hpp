#pragma once

namespace alignkit {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Run-directory layout version. Checked on open; a mismatch is a hard error.
inline constexpr const char* kLayoutVersion = "alignkit-run-v1";

/// Content-address digest used for all record ids and config digests.
/// Fixed here in one place and recorded in every round manifest.
inline constexpr const char* kHashAlgo = "sha256";

}  // namespace alignkit
