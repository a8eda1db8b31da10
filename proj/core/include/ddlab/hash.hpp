#pragma once

#include <string>
#include <string_view>

namespace ddlab {

std::string sha1_hex(std::string_view data);

// Same digest `git hash-object` reports for a blob with this content.
std::string git_blob_hash(std::string_view content);

}  // namespace ddlab
