#pragma once

#include <cstdio>
#include <string>

namespace enedina {

// The one formatting rule for numeric values in rendered text: six
// significant digits, trailing zeros kept, fixed/scientific switch as in
// printf "%#.6g" (scientific when the decimal exponent is < -4 or >= 6),
// except that a bare trailing decimal point (exactly six integer digits) is
// dropped so every rendering is also a valid JSON numeral. Negative zero is
// normalized so formatting is byte-stable.
inline std::string format_sig6(double v) {
    if (v == 0.0) v = 0.0;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%#.6g", v);
    std::string s = buf;
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

} // namespace enedina
