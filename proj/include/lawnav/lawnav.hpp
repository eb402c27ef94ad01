#ifndef LAWNAV_LAWNAV_HPP
#define LAWNAV_LAWNAV_HPP

#include "core.hpp"
#include "grid_map.hpp"
#include "worldsim.hpp"
#include "dtw.hpp"
#include "refpath.hpp"
#include "episode.hpp"
#include "episodes.hpp"
#include "sensors.hpp"
#include "metrics.hpp"
#include "policy.hpp"
#include "trainer.hpp"
#include "io.hpp"
#include "report.hpp"
#include "cli.hpp"

#endif // LAWNAV_LAWNAV_HPP
