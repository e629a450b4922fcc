#pragma once

// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// clobbers an Eigen parameter name.
#include "adaptrial/service.hpp"

#include <httplib.h>

namespace adaptrial::http_api {

/// Routes:
///   GET  /api/healthz
///   POST /api/trials                              body: TrialConfig fields (all optional)
///   GET  /api/trials/{id}
///   POST /api/trials/{id}/patients                body: {"x": <covariate>}
///   POST /api/trials/{id}/patients/{t}/outcome    body: {"y": <response>}
/// Errors answer {code, message, field?}.
void register_routes(httplib::Server& server, service::TrialService& svc);

}  // namespace adaptrial::http_api
