#pragma once

#include <functional>
#include <string>

#include "nsbot/service.hpp"

namespace httplib {
class Server;
}

namespace nsbot::service {

/// Installs the /v1 routes (see docs/api.md) on `server`.
void install_routes(httplib::Server& server, Service& service);

/// Blocks serving on host:port until the server is stopped. Port 0 picks a
/// free port; `on_ready` receives the bound port before requests are
/// accepted. Returns false if the socket could not be bound.
bool serve(Service& service, const std::string& host, int port, const std::function<void(int)>& on_ready = {});

} // namespace nsbot::service
