#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "ciaf/classify.hpp"
#include "ciaf/error.hpp"

namespace ciaf {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::InvalidArgument, "endpoint must be an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResult post(const std::string& url, const std::vector<HttpHeader>& headers,
                    const std::string& body, std::chrono::milliseconds timeout) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        httplib::Headers hdrs;
        std::string content_type = "application/json";
        for (const auto& h : headers) {
            if (h.name == "Content-Type")
                content_type = h.value;
            else
                hdrs.emplace(h.name, h.value);
        }

        HttpResult result;
        auto res = client.Post(path, hdrs, body, content_type);
        if (!res) {
            result.error = httplib::to_string(res.error());
            return result;
        }
        result.status = res->status;
        result.body = res->body;
        return result;
    }
};

} // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

} // namespace ciaf
