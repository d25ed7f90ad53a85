#include "oracles/reference_selectors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace oracle {

double correlation(const Field& a, const Field& b) {
    const std::size_t n = a.values.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a.values[i];
        mb += b.values[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.values[i] - ma, db = b.values[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0 || sbb == 0) {
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) same = same && a.values[i] == a.values[0] && b.values[i] == a.values[0];
        return same ? 1.0 : 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::size_t> flows(const std::vector<Field>& x, const std::vector<double>& E,
                               const FlowsParams& p) {
    const std::size_t T = x.size();
    std::vector<std::size_t> S{0};
    std::size_t s = 0;
    std::deque<std::size_t> Q;
    std::size_t L = 0;  // first push is index 1
    if (T == 1) return S;
    while (s < T - 1) {
        if (Q.size() == p.queue || L == T - 1) {
            std::size_t best = s + 1;
            if (!Q.empty()) {
                double sum = 0, mx = 0;
                for (std::size_t t : Q) {
                    const double d = std::abs(E[t] - E[t - 1]);
                    sum += d;
                    mx = std::max(mx, d);
                }
                const double mean = sum / static_cast<double>(Q.size());
                const double eta = std::sqrt(mx / (mean + p.eps));
                const double de0 = std::abs(E[s + 1] - E[s]);
                for (std::size_t i : Q) {
                    const double de = std::abs(E[i] - E[s]);
                    const double rho = correlation(x[i], x[s]);
                    if (de / (de0 + p.eps) <= eta && rho >= p.tau)
                        best = i;
                    else
                        break;
                }
            }
            s = best;
            S.push_back(best);
            while (!Q.empty() && Q.front() <= s) Q.pop_front();
        }
        if (L + 1 < T) {
            L = L + 1;
            Q.push_back(L);
            while (Q.size() > p.queue) Q.pop_front();  // maxlen deque
        }
    }
    return S;
}

std::vector<std::size_t> surge(const std::vector<double>& A, const SurgeParams& p) {
    const std::size_t T = A.size();
    std::vector<std::size_t> S{0};
    std::size_t t = 0;
    std::size_t c = 0;
    std::deque<double> H;
    while (t < T - 1) {
        std::size_t next;
        if (H.size() < p.warmup) {
            next = t + 1;
            c = 0;
        } else {
            std::vector<double> sorted(H.begin(), H.end());
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double med = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
            if (A[t + 1] > p.gamma * med) {
                next = t + 1;
                c = c + 1;
            } else {
                c = 0;
                const std::size_t cand = std::min(t + p.window, T - 1);
                next = cand;
                for (std::size_t k = t + 1; k <= cand; ++k)
                    if (A[k] > p.gamma * med) {
                        next = k;
                        break;
                    }
            }
        }
        t = next;
        S.push_back(t);
        if (c == 0 || c > p.patience) {
            H.push_back(A[t]);
            if (H.size() > p.history) H.pop_front();
            if (c > p.patience) c = 0;
        }
    }
    return S;
}

}  // namespace oracle
