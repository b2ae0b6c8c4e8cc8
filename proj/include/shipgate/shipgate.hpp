#pragma once

#include "shipgate/common.hpp"
#include "shipgate/qtensor.hpp"
#include "shipgate/events.hpp"
#include "shipgate/graph.hpp"
#include "shipgate/engine.hpp"
#include "shipgate/netdef.hpp"
#include "shipgate/model_io.hpp"
#include "shipgate/gate.hpp"
#include "shipgate/energy.hpp"
#include "shipgate/rle.hpp"
#include "shipgate/dataset.hpp"
#include "shipgate/image.hpp"
#include "shipgate/map_eval.hpp"
#include "shipgate/cli.hpp"
