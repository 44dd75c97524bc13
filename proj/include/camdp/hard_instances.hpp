#pragma once

#include <optional>

#include "camdp/oracle.hpp"
#include "camdp/types.hpp"

namespace camdp {

/// Parameters of the general (multichain) lower-bound family.
///
/// Branch s occupies states 6s..6s+5 (local roles 0..5); the hub is the last
/// state. Actions are 0-based: action 0 at local state 1 is the reference arm
/// a1 and a designated arm a_star lies in [1, A).
struct GeneralHardParams {
    Index S = 7;  // 6 * branches + 1 hub
    Index A = 3;
    double B = 2.0;
    double epsilon = 0.1;
    double zeta = 0.25;
    std::optional<Index> s_star;  // none builds the base master M0
    Index a_star = 1;
    double b = 0.5;

    Index branches() const { return (S - 1) / 6; }
    /// Actions of the generated instance: the hub needs one per branch.
    Index n_actions() const;
    void validate() const;
};

/// Six-state component; start is a point mass on local state 0.
/// `a_star` empty gives the reference component M1.
Cmdp build_general_component(std::optional<Index> a_star, Index A, double B, double epsilon, double zeta,
                             double b = 0.5);

Cmdp build_general_master(const GeneralHardParams& p);

/// Long-run masses of the general family.
struct HardOccupancy {
    double mu0 = 0;  // absorbed at local state 5
    double mu1 = 0;  // absorbed at local state 4 (arm a1)
    double mu2 = 0;  // absorbed through non-designated arms
    double mu3 = 0;  // absorbed through the designated arm
    double mu1_prime() const;
};

/// From occupancy-LP variables (x: long-run frequencies, y: transient flow).
HardOccupancy hard_occupancy(const Cmdp& m, const GeneralHardParams& p, const MatrixXd& x, const MatrixXd& y);
/// Exact masses of a stationary policy.
HardOccupancy hard_occupancy(const Cmdp& m, const GeneralHardParams& p, const Policy& pi);

double occupancy_fraction_mu1(const Cmdp& m, const GeneralHardParams& p, const Policy& pi);
double occupancy_fraction_mu1(const Cmdp& m, const GeneralHardParams& p, const OccupancySolution<double>& sol);

/// Throws ArgumentError unless m has the layout produced by build_general_master(p).
void check_general_layout(const Cmdp& m, const GeneralHardParams& p);

/// Linear cut mu1 (sense) (2/3)(1 - mu0) on long-run frequencies.
OccupancyCut<double> mu1_prime_cut(const Cmdp& m, RowSense sense, double level = 2.0 / 3.0);

struct KlResult {
    double kl = 0;
    double bound = 0;
};

/// KL(Q1 || Q2) for Q1 = Cat(1 - 1/B, (1-2 eps zeta)/(2B), (1+2 eps zeta)/(2B)) and
/// Q2 its swap, with the bound 32 eps^2 zeta^2 / B.
KlResult kl_designated_rows(double epsilon, double zeta, double B);

/// Communicating (tree of x, y, z components) family. Best-effort geometry.
struct CommunicatingHardParams {
    Index S = 19;
    Index A = 4;
    double D = 64;
    double epsilon = 0.05;
    double zeta = 0.25;
    std::optional<Index> k;  // perturbed leaf; none builds M0
    Index l = 1;             // perturbed arm in [1, A-1)
    double b = 0.5;

    Index components() const { return (S + 3) / 4; }
    Index internal_nodes() const { return S - 3 * components(); }
    void validate() const;
};

/// State layout of a communicating instance.
struct CommunicatingLayout {
    std::vector<Index> parent;  // per internal node and x state; -1 at the root
    std::vector<Index> x, y, z; // per component
    Index root = 0;
};

CommunicatingLayout communicating_layout(const CommunicatingHardParams& p);
Cmdp build_communicating_hard(const CommunicatingHardParams& p);

/// Every state reaches every other state in the union support graph.
bool is_communicating(const Cmdp& m);

} // namespace camdp
