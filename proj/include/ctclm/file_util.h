// include/ctclm/file_util.h

#ifndef CTCLM_FILE_UTIL_H_
#define CTCLM_FILE_UTIL_H_

#include <string>
#include <string_view>
#include <vector>

namespace ctclm {

// Whole file as bytes. Throws InputError if it cannot be opened.
std::string ReadFile(const std::string &path);

// LF-terminated lines; a trailing CR is stripped and a final newline does not
// add an empty line. A leading UTF-8 BOM is rejected with FormatError.
std::vector<std::string> ReadLines(const std::string &path);
std::vector<std::string> SplitLines(std::string_view text);

// Writes to a sibling temp file, then renames over `path`. Parent
// directories are created as needed.
void WriteFileAtomic(const std::string &path, std::string_view content);

}  // namespace ctclm

#endif  // CTCLM_FILE_UTIL_H_
