#ifndef MINEDISPATCH_LOGGING_HPP
#define MINEDISPATCH_LOGGING_HPP

namespace minedispatch {

/// Routes library logging to stderr at the level named by MINE_DISPATCH_LOG
/// (error, warn, info, debug; default info). Safe to call repeatedly.
void configure_logging();

}  // namespace minedispatch

#endif  // MINEDISPATCH_LOGGING_HPP
