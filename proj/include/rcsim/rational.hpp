#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace rcsim {

// Exact rational on 64-bit numerator/denominator, always normalized
// (gcd 1, denominator > 0). Intermediate products run through __int128
// and overflow past 64 bits throws; the enumeration spaces handled here
// keep denominators far below that.
class Rat {
public:
    Rat() : num_(0), den_(1) {}
    Rat(long long n) : num_(n), den_(1) {}
    Rat(long long n, long long d);

    static Rat parse(const std::string& s);  // "p/q" or "p"

    long long num() const { return num_; }
    long long den() const { return den_; }

    Rat operator+(const Rat& o) const;
    Rat operator-(const Rat& o) const;
    Rat operator*(const Rat& o) const;
    Rat operator/(const Rat& o) const;
    Rat operator-() const { return Rat(-num_, den_); }
    Rat& operator+=(const Rat& o) { return *this = *this + o; }
    Rat& operator-=(const Rat& o) { return *this = *this - o; }
    Rat& operator*=(const Rat& o) { return *this = *this * o; }
    Rat& operator/=(const Rat& o) { return *this = *this / o; }

    bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rat& o) const { return !(*this == o); }
    bool operator<(const Rat& o) const;
    bool operator>(const Rat& o) const { return o < *this; }
    bool operator<=(const Rat& o) const { return !(o < *this); }
    bool operator>=(const Rat& o) const { return !(*this < o); }

    bool is_zero() const { return num_ == 0; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const;  // always "p/q"

private:
    long long num_;
    long long den_;
    static Rat make(__int128 n, __int128 d);
};

std::ostream& operator<<(std::ostream& os, const Rat& r);

}  // namespace rcsim
