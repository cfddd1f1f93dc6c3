#pragma once

#include <stdexcept>
#include <string>

namespace ppmine {

// malformed user input: bad items, bad keywords, out-of-range parameters
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// configuration that cannot be executed (missing fields, inconsistent sizes)
struct config_error : invalid_input {
  using invalid_input::invalid_input;
};

// crypto parameter sets that fail validation
struct invalid_params : invalid_input {
  using invalid_input::invalid_input;
};

// plaintext outside the residue range of the additive scheme
struct plaintext_range_error : invalid_input {
  using invalid_input::invalid_input;
};

// ciphertext degree is zero, negative, or above the configured cap
struct invalid_degree_error : invalid_input {
  using invalid_input::invalid_input;
};

// attempt to combine ciphertexts of different degrees
struct degree_mismatch_error : invalid_input {
  using invalid_input::invalid_input;
};

// a malformed frame; carries the name of the offending field in what()
struct codec_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// send() addressed to a party that is not registered
struct routing_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// socket-level failure after the configured number of retries
struct transport_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// a party observed a message sequence it cannot make progress on
struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ppmine
