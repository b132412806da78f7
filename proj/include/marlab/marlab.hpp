#pragma once

#include "marlab/attack.hpp"
#include "marlab/dataset.hpp"
#include "marlab/errors.hpp"
#include "marlab/fixtures.hpp"
#include "marlab/io.hpp"
#include "marlab/kkt.hpp"
#include "marlab/network.hpp"
#include "marlab/nnls.hpp"
#include "marlab/prng.hpp"
#include "marlab/robust.hpp"
#include "marlab/sweep.hpp"
#include "marlab/trainer.hpp"
