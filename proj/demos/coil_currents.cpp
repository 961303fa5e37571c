// Currents a four-coil rig needs to point a 1 mT field in a few directions,
// and the field those currents actually produce at the workspace centre.

#include <cstdio>

#include "janus/magnetics.hpp"

using namespace janus;

int main() {
  const CoilRig rig = default_rig();
  for (double angle : {0.0, 0.5, 1.8, -2.4}) {
    const FieldCommand cmd{angle, 1 * units::mT};
    const Eigen::VectorXd I = rig_currents_for_direction(rig, cmd);
    const Vec3 B = biot_savart(rig.with_currents(I), Vec3::Zero(), false).B;
    std::printf("angle %+.2f rad  currents [%7.2f %7.2f %7.2f %7.2f] A  B = (%.4f, %.4f) mT\n",
                angle, I[0], I[1], I[2], I[3], B.x() / units::mT, B.y() / units::mT);
  }
}
