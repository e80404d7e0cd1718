#pragma once

#include <map>
#include <string>

namespace axeval::detail {

// Generated at configure time from the files under prompts/.
const std::map<std::string, std::string>& builtin_prompt_files();

}  // namespace axeval::detail
