#pragma once
#include <stdexcept>

namespace hedgelab {

// Base of every error the library throws; subsystems use the subtypes below
// so callers can distinguish bad configuration from internal failures.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : error { using error::error; };     // invalid user configuration
struct domain_error : error { using error::error; };     // numeric domain violation
struct shape_error : error { using error::error; };      // tensor dimension mismatch
struct contract_error : error { using error::error; };   // API misuse
struct integrity_error : error { using error::error; };  // corrupt checkpoint/artifact
struct training_error : error { using error::error; };   // divergence, non-finite grads
struct io_error : error { using error::error; };         // filesystem or parse failure

}  // namespace hedgelab
