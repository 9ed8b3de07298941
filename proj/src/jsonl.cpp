#include "aealab/jsonl.hpp"

#include "aealab/error.hpp"

#include <string>

namespace aealab::jsonl {

void for_each(std::istream& in,
              const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw Error(ErrorCode::parse_error, "line is not a JSON object",
                        static_cast<long>(line_no));
        }
        fn(line_no, doc);
    }
}

} // namespace aealab::jsonl
