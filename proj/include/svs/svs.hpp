// Umbrella header.
#pragma once

#include "svs/core.hpp"
#include "svs/dataset.hpp"
#include "svs/detector.hpp"
#include "svs/explain.hpp"
#include "svs/hungarian.hpp"
#include "svs/kalman.hpp"
#include "svs/netpbm.hpp"
#include "svs/op_count.hpp"
#include "svs/pipeline.hpp"
#include "svs/scenes.hpp"
#include "svs/sensor.hpp"
#include "svs/svm.hpp"
#include "svs/tracker.hpp"
