#include "adaptrial/http_api.hpp"

#include <sys/socket.h>

#include <cmath>

namespace adaptrial::http_api {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), kJson);
}

json parse_body(const httplib::Request& req, bool allow_empty)
{
    if (req.body.empty()) {
        if (allow_empty) return json::object();
        throw service::ServiceError(422, "invalid_input", "request body must be a JSON object");
    }
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw service::ServiceError(422, "invalid_input", "request body must be a JSON object");
    }
    return j;
}

double number_field(const json& body, const char* name)
{
    const auto it = body.find(name);
    if (it == body.end() || !it->is_number()) {
        throw service::ServiceError(422, "invalid_input", std::string(name) + " must be a number", name);
    }
    return it->get<double>();
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn)
{
    try {
        fn();
    } catch (const service::ServiceError& e) {
        reply(res, e.http_status(), e.to_json());
    } catch (const std::exception& e) {
        reply(res, 500, json{{"code", "internal"}, {"message", e.what()}});
    }
}

}  // namespace

void register_routes(httplib::Server& server, service::TrialService& svc)
{
    // httplib defaults to SO_REUSEPORT, which would let a second server share the
    // port (and the state dir) instead of failing to bind.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });

    server.Get("/api/healthz", [](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, json{{"status", "ok"}});
    });

    server.Post("/api/trials", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { reply(res, 201, svc.create_trial(parse_body(req, true))); });
    });

    server.Get(R"(/api/trials/([0-9A-Za-z_-]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { reply(res, 200, svc.get_trial(req.matches[1])); });
    });

    server.Post(R"(/api/trials/([0-9A-Za-z_-]+)/patients)",
                [&svc](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const json body = parse_body(req, false);
                        reply(res, 200, svc.enroll(req.matches[1], number_field(body, "x")));
                    });
                });

    server.Post(R"(/api/trials/([0-9A-Za-z_-]+)/patients/([0-9]+)/outcome)",
                [&svc](const httplib::Request& req, httplib::Response& res) {
                    guarded(res, [&] {
                        const json body = parse_body(req, false);
                        const std::string t_text = req.matches[2];
                        if (t_text.size() > 9) {
                            throw service::ServiceError(409, "conflict", "no such patient index", "t");
                        }
                        reply(res, 200, svc.record_outcome(req.matches[1], std::stoi(t_text), number_field(body, "y")));
                    });
                });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            res.set_content(json{{"code", res.status == 404 ? "not_found" : "error"},
                                 {"message", "no route"}}.dump(),
                            kJson);
        }
    });
}

}  // namespace adaptrial::http_api
