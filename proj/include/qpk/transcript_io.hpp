#pragma once

#include <string>

#include <json.hpp>

#include "qpk/protocol.hpp"

namespace qpk::protocol {

// Serialization layout (stable field names):
//   params    - public protocol parameters
//   declared  - public message shape (window / digital map, no plaintext)
//   symbols[] - per record: symbol, repetition, phi_A, u[]
//   private   - Bob's samples: v[][] (only with include_private)
//   truth     - ground-truth attack label (only with include_truth; test-only)
//   meta      - seed and format version
// The public section never contains theta_B or plaintext message values.
nlohmann::json transcript_to_json(const Transcript& transcript, bool include_private,
                                  bool include_truth);

Transcript transcript_from_json(const nlohmann::json& j);

}  // namespace qpk::protocol
