#pragma once

#include <string>

#include "nnsos/sdp.hpp"

namespace nnsos {

// Sparse SDPA (.dat-s) export of an SdpProblem. The problem's rows become the
// constraint matrices F_1..F_m with c = rhs, the (maximize) objective becomes
// F_0, and free variables are split into a diagonal LP block as w = w+ - w-,
// so any SDPA-format solver can cross-check the embedded one.
void write_sdpa(const SdpProblem& prob, const std::string& path);
std::string sdpa_text(const SdpProblem& prob);

// Reads a .dat-s file back into an SdpProblem. Diagonal blocks come back as
// 1x1 PSD blocks; split free variables stay split (the encodings solve to the
// same optimum).
SdpProblem read_sdpa(const std::string& path);
SdpProblem parse_sdpa_text(const std::string& text);

// Line-based solution exchange: dual vector then block entries, documented in
// the README. Enough to import an external solver's answer into validate().
void write_solution_file(const SdpProblem& prob, const ConicSolution& sol,
                         const std::string& path);
ConicSolution read_solution_file(const SdpProblem& prob,
                                 const std::string& path);

}  // namespace nnsos
