// Copyright 2026 The syschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cerrno>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <sys/syscall.h>

// Host-architecture syscall and errno name tables.  Numbers come from the
// libc headers at build time (each entry is guarded, so the table compiles
// on any Linux), and unknown values degrade to "syscall_<nr>" / "errno_<n>"
// instead of failing.

namespace syschaos::trace {

namespace detail {

inline std::map<std::string, long> build_syscall_table() {
  std::map<std::string, long> t;
#define SYSCHAOS_SYS(name) t[#name] = SYS_##name
#ifdef SYS_read
  SYSCHAOS_SYS(read);
#endif
#ifdef SYS_write
  SYSCHAOS_SYS(write);
#endif
#ifdef SYS_pread64
  SYSCHAOS_SYS(pread64);
#endif
#ifdef SYS_pwrite64
  SYSCHAOS_SYS(pwrite64);
#endif
#ifdef SYS_readv
  SYSCHAOS_SYS(readv);
#endif
#ifdef SYS_writev
  SYSCHAOS_SYS(writev);
#endif
#ifdef SYS_open
  SYSCHAOS_SYS(open);
#endif
#ifdef SYS_openat
  SYSCHAOS_SYS(openat);
#endif
#ifdef SYS_close
  SYSCHAOS_SYS(close);
#endif
#ifdef SYS_stat
  SYSCHAOS_SYS(stat);
#endif
#ifdef SYS_fstat
  SYSCHAOS_SYS(fstat);
#endif
#ifdef SYS_lstat
  SYSCHAOS_SYS(lstat);
#endif
#ifdef SYS_newfstatat
  SYSCHAOS_SYS(newfstatat);
#endif
#ifdef SYS_statx
  SYSCHAOS_SYS(statx);
#endif
#ifdef SYS_poll
  SYSCHAOS_SYS(poll);
#endif
#ifdef SYS_ppoll
  SYSCHAOS_SYS(ppoll);
#endif
#ifdef SYS_select
  SYSCHAOS_SYS(select);
#endif
#ifdef SYS_pselect6
  SYSCHAOS_SYS(pselect6);
#endif
#ifdef SYS_lseek
  SYSCHAOS_SYS(lseek);
#endif
#ifdef SYS_mmap
  SYSCHAOS_SYS(mmap);
#endif
#ifdef SYS_mprotect
  SYSCHAOS_SYS(mprotect);
#endif
#ifdef SYS_munmap
  SYSCHAOS_SYS(munmap);
#endif
#ifdef SYS_mremap
  SYSCHAOS_SYS(mremap);
#endif
#ifdef SYS_madvise
  SYSCHAOS_SYS(madvise);
#endif
#ifdef SYS_brk
  SYSCHAOS_SYS(brk);
#endif
#ifdef SYS_rt_sigaction
  SYSCHAOS_SYS(rt_sigaction);
#endif
#ifdef SYS_rt_sigprocmask
  SYSCHAOS_SYS(rt_sigprocmask);
#endif
#ifdef SYS_rt_sigreturn
  SYSCHAOS_SYS(rt_sigreturn);
#endif
#ifdef SYS_sigaltstack
  SYSCHAOS_SYS(sigaltstack);
#endif
#ifdef SYS_ioctl
  SYSCHAOS_SYS(ioctl);
#endif
#ifdef SYS_access
  SYSCHAOS_SYS(access);
#endif
#ifdef SYS_faccessat
  SYSCHAOS_SYS(faccessat);
#endif
#ifdef SYS_pipe
  SYSCHAOS_SYS(pipe);
#endif
#ifdef SYS_pipe2
  SYSCHAOS_SYS(pipe2);
#endif
#ifdef SYS_sched_yield
  SYSCHAOS_SYS(sched_yield);
#endif
#ifdef SYS_sched_getaffinity
  SYSCHAOS_SYS(sched_getaffinity);
#endif
#ifdef SYS_dup
  SYSCHAOS_SYS(dup);
#endif
#ifdef SYS_dup2
  SYSCHAOS_SYS(dup2);
#endif
#ifdef SYS_dup3
  SYSCHAOS_SYS(dup3);
#endif
#ifdef SYS_nanosleep
  SYSCHAOS_SYS(nanosleep);
#endif
#ifdef SYS_clock_nanosleep
  SYSCHAOS_SYS(clock_nanosleep);
#endif
#ifdef SYS_clock_gettime
  SYSCHAOS_SYS(clock_gettime);
#endif
#ifdef SYS_gettimeofday
  SYSCHAOS_SYS(gettimeofday);
#endif
#ifdef SYS_getpid
  SYSCHAOS_SYS(getpid);
#endif
#ifdef SYS_gettid
  SYSCHAOS_SYS(gettid);
#endif
#ifdef SYS_getppid
  SYSCHAOS_SYS(getppid);
#endif
#ifdef SYS_getuid
  SYSCHAOS_SYS(getuid);
#endif
#ifdef SYS_geteuid
  SYSCHAOS_SYS(geteuid);
#endif
#ifdef SYS_getgid
  SYSCHAOS_SYS(getgid);
#endif
#ifdef SYS_getegid
  SYSCHAOS_SYS(getegid);
#endif
#ifdef SYS_socket
  SYSCHAOS_SYS(socket);
#endif
#ifdef SYS_socketpair
  SYSCHAOS_SYS(socketpair);
#endif
#ifdef SYS_connect
  SYSCHAOS_SYS(connect);
#endif
#ifdef SYS_accept
  SYSCHAOS_SYS(accept);
#endif
#ifdef SYS_accept4
  SYSCHAOS_SYS(accept4);
#endif
#ifdef SYS_bind
  SYSCHAOS_SYS(bind);
#endif
#ifdef SYS_listen
  SYSCHAOS_SYS(listen);
#endif
#ifdef SYS_sendto
  SYSCHAOS_SYS(sendto);
#endif
#ifdef SYS_recvfrom
  SYSCHAOS_SYS(recvfrom);
#endif
#ifdef SYS_sendmsg
  SYSCHAOS_SYS(sendmsg);
#endif
#ifdef SYS_recvmsg
  SYSCHAOS_SYS(recvmsg);
#endif
#ifdef SYS_shutdown
  SYSCHAOS_SYS(shutdown);
#endif
#ifdef SYS_getsockname
  SYSCHAOS_SYS(getsockname);
#endif
#ifdef SYS_getpeername
  SYSCHAOS_SYS(getpeername);
#endif
#ifdef SYS_setsockopt
  SYSCHAOS_SYS(setsockopt);
#endif
#ifdef SYS_getsockopt
  SYSCHAOS_SYS(getsockopt);
#endif
#ifdef SYS_clone
  SYSCHAOS_SYS(clone);
#endif
#ifdef SYS_clone3
  SYSCHAOS_SYS(clone3);
#endif
#ifdef SYS_fork
  SYSCHAOS_SYS(fork);
#endif
#ifdef SYS_vfork
  SYSCHAOS_SYS(vfork);
#endif
#ifdef SYS_execve
  SYSCHAOS_SYS(execve);
#endif
#ifdef SYS_exit
  SYSCHAOS_SYS(exit);
#endif
#ifdef SYS_exit_group
  SYSCHAOS_SYS(exit_group);
#endif
#ifdef SYS_wait4
  SYSCHAOS_SYS(wait4);
#endif
#ifdef SYS_waitid
  SYSCHAOS_SYS(waitid);
#endif
#ifdef SYS_kill
  SYSCHAOS_SYS(kill);
#endif
#ifdef SYS_tgkill
  SYSCHAOS_SYS(tgkill);
#endif
#ifdef SYS_uname
  SYSCHAOS_SYS(uname);
#endif
#ifdef SYS_fcntl
  SYSCHAOS_SYS(fcntl);
#endif
#ifdef SYS_flock
  SYSCHAOS_SYS(flock);
#endif
#ifdef SYS_fsync
  SYSCHAOS_SYS(fsync);
#endif
#ifdef SYS_fdatasync
  SYSCHAOS_SYS(fdatasync);
#endif
#ifdef SYS_ftruncate
  SYSCHAOS_SYS(ftruncate);
#endif
#ifdef SYS_getdents64
  SYSCHAOS_SYS(getdents64);
#endif
#ifdef SYS_getcwd
  SYSCHAOS_SYS(getcwd);
#endif
#ifdef SYS_chdir
  SYSCHAOS_SYS(chdir);
#endif
#ifdef SYS_rename
  SYSCHAOS_SYS(rename);
#endif
#ifdef SYS_renameat
  SYSCHAOS_SYS(renameat);
#endif
#ifdef SYS_mkdir
  SYSCHAOS_SYS(mkdir);
#endif
#ifdef SYS_mkdirat
  SYSCHAOS_SYS(mkdirat);
#endif
#ifdef SYS_rmdir
  SYSCHAOS_SYS(rmdir);
#endif
#ifdef SYS_link
  SYSCHAOS_SYS(link);
#endif
#ifdef SYS_unlink
  SYSCHAOS_SYS(unlink);
#endif
#ifdef SYS_unlinkat
  SYSCHAOS_SYS(unlinkat);
#endif
#ifdef SYS_symlink
  SYSCHAOS_SYS(symlink);
#endif
#ifdef SYS_readlink
  SYSCHAOS_SYS(readlink);
#endif
#ifdef SYS_chmod
  SYSCHAOS_SYS(chmod);
#endif
#ifdef SYS_fchmod
  SYSCHAOS_SYS(fchmod);
#endif
#ifdef SYS_umask
  SYSCHAOS_SYS(umask);
#endif
#ifdef SYS_getrlimit
  SYSCHAOS_SYS(getrlimit);
#endif
#ifdef SYS_prlimit64
  SYSCHAOS_SYS(prlimit64);
#endif
#ifdef SYS_getrusage
  SYSCHAOS_SYS(getrusage);
#endif
#ifdef SYS_sysinfo
  SYSCHAOS_SYS(sysinfo);
#endif
#ifdef SYS_futex
  SYSCHAOS_SYS(futex);
#endif
#ifdef SYS_epoll_create1
  SYSCHAOS_SYS(epoll_create1);
#endif
#ifdef SYS_epoll_ctl
  SYSCHAOS_SYS(epoll_ctl);
#endif
#ifdef SYS_epoll_wait
  SYSCHAOS_SYS(epoll_wait);
#endif
#ifdef SYS_epoll_pwait
  SYSCHAOS_SYS(epoll_pwait);
#endif
#ifdef SYS_eventfd2
  SYSCHAOS_SYS(eventfd2);
#endif
#ifdef SYS_timerfd_create
  SYSCHAOS_SYS(timerfd_create);
#endif
#ifdef SYS_timerfd_settime
  SYSCHAOS_SYS(timerfd_settime);
#endif
#ifdef SYS_signalfd4
  SYSCHAOS_SYS(signalfd4);
#endif
#ifdef SYS_inotify_init1
  SYSCHAOS_SYS(inotify_init1);
#endif
#ifdef SYS_prctl
  SYSCHAOS_SYS(prctl);
#endif
#ifdef SYS_arch_prctl
  SYSCHAOS_SYS(arch_prctl);
#endif
#ifdef SYS_set_tid_address
  SYSCHAOS_SYS(set_tid_address);
#endif
#ifdef SYS_set_robust_list
  SYSCHAOS_SYS(set_robust_list);
#endif
#ifdef SYS_get_robust_list
  SYSCHAOS_SYS(get_robust_list);
#endif
#ifdef SYS_membarrier
  SYSCHAOS_SYS(membarrier);
#endif
#ifdef SYS_getrandom
  SYSCHAOS_SYS(getrandom);
#endif
#ifdef SYS_memfd_create
  SYSCHAOS_SYS(memfd_create);
#endif
#ifdef SYS_rseq
  SYSCHAOS_SYS(rseq);
#endif
#ifdef SYS_sendfile
  SYSCHAOS_SYS(sendfile);
#endif
#ifdef SYS_splice
  SYSCHAOS_SYS(splice);
#endif
#ifdef SYS_copy_file_range
  SYSCHAOS_SYS(copy_file_range);
#endif
#ifdef SYS_setitimer
  SYSCHAOS_SYS(setitimer);
#endif
#ifdef SYS_alarm
  SYSCHAOS_SYS(alarm);
#endif
#ifdef SYS_pause
  SYSCHAOS_SYS(pause);
#endif
#ifdef SYS_utimensat
  SYSCHAOS_SYS(utimensat);
#endif
#undef SYSCHAOS_SYS
  return t;
}

inline std::map<std::string, int> build_errno_table() {
  std::map<std::string, int> t;
#define SYSCHAOS_ERR(name) t[#name] = name
  SYSCHAOS_ERR(EPERM);
  SYSCHAOS_ERR(ENOENT);
  SYSCHAOS_ERR(ESRCH);
  SYSCHAOS_ERR(EINTR);
  SYSCHAOS_ERR(EIO);
  SYSCHAOS_ERR(ENXIO);
  SYSCHAOS_ERR(E2BIG);
  SYSCHAOS_ERR(ENOEXEC);
  SYSCHAOS_ERR(EBADF);
  SYSCHAOS_ERR(ECHILD);
  SYSCHAOS_ERR(EAGAIN);
  SYSCHAOS_ERR(ENOMEM);
  SYSCHAOS_ERR(EACCES);
  SYSCHAOS_ERR(EFAULT);
  SYSCHAOS_ERR(EBUSY);
  SYSCHAOS_ERR(EEXIST);
  SYSCHAOS_ERR(EXDEV);
  SYSCHAOS_ERR(ENODEV);
  SYSCHAOS_ERR(ENOTDIR);
  SYSCHAOS_ERR(EISDIR);
  SYSCHAOS_ERR(EINVAL);
  SYSCHAOS_ERR(ENFILE);
  SYSCHAOS_ERR(EMFILE);
  SYSCHAOS_ERR(ENOTTY);
  SYSCHAOS_ERR(ETXTBSY);
  SYSCHAOS_ERR(EFBIG);
  SYSCHAOS_ERR(ENOSPC);
  SYSCHAOS_ERR(ESPIPE);
  SYSCHAOS_ERR(EROFS);
  SYSCHAOS_ERR(EMLINK);
  SYSCHAOS_ERR(EPIPE);
  SYSCHAOS_ERR(EDOM);
  SYSCHAOS_ERR(ERANGE);
  SYSCHAOS_ERR(EDEADLK);
  SYSCHAOS_ERR(ENAMETOOLONG);
  SYSCHAOS_ERR(ENOLCK);
  SYSCHAOS_ERR(ENOSYS);
  SYSCHAOS_ERR(ENOTEMPTY);
  SYSCHAOS_ERR(ELOOP);
  SYSCHAOS_ERR(ENOMSG);
  SYSCHAOS_ERR(EIDRM);
  SYSCHAOS_ERR(ENOSTR);
  SYSCHAOS_ERR(ENODATA);
  SYSCHAOS_ERR(ETIME);
  SYSCHAOS_ERR(ENOSR);
  SYSCHAOS_ERR(EPROTO);
  SYSCHAOS_ERR(EBADMSG);
  SYSCHAOS_ERR(EOVERFLOW);
  SYSCHAOS_ERR(EILSEQ);
  SYSCHAOS_ERR(ENOTSOCK);
  SYSCHAOS_ERR(EDESTADDRREQ);
  SYSCHAOS_ERR(EMSGSIZE);
  SYSCHAOS_ERR(EPROTOTYPE);
  SYSCHAOS_ERR(ENOPROTOOPT);
  SYSCHAOS_ERR(EPROTONOSUPPORT);
  SYSCHAOS_ERR(ESOCKTNOSUPPORT);
  SYSCHAOS_ERR(EOPNOTSUPP);
  SYSCHAOS_ERR(EPFNOSUPPORT);
  SYSCHAOS_ERR(EAFNOSUPPORT);
  SYSCHAOS_ERR(EADDRINUSE);
  SYSCHAOS_ERR(EADDRNOTAVAIL);
  SYSCHAOS_ERR(ENETDOWN);
  SYSCHAOS_ERR(ENETUNREACH);
  SYSCHAOS_ERR(ENETRESET);
  SYSCHAOS_ERR(ECONNABORTED);
  SYSCHAOS_ERR(ECONNRESET);
  SYSCHAOS_ERR(ENOBUFS);
  SYSCHAOS_ERR(EISCONN);
  SYSCHAOS_ERR(ENOTCONN);
  SYSCHAOS_ERR(ESHUTDOWN);
  SYSCHAOS_ERR(ETOOMANYREFS);
  SYSCHAOS_ERR(ETIMEDOUT);
  SYSCHAOS_ERR(ECONNREFUSED);
  SYSCHAOS_ERR(EHOSTDOWN);
  SYSCHAOS_ERR(EHOSTUNREACH);
  SYSCHAOS_ERR(EALREADY);
  SYSCHAOS_ERR(EINPROGRESS);
  SYSCHAOS_ERR(ESTALE);
  SYSCHAOS_ERR(EDQUOT);
  SYSCHAOS_ERR(ECANCELED);
  SYSCHAOS_ERR(EOWNERDEAD);
  SYSCHAOS_ERR(ENOTRECOVERABLE);
#undef SYSCHAOS_ERR
  return t;
}

}  // namespace detail

inline const std::map<std::string, long>& syscall_numbers() {
  static const auto table = detail::build_syscall_table();
  return table;
}

inline std::optional<long> syscall_number(const std::string& name) {
  const auto& t = syscall_numbers();
  const auto it = t.find(name);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

inline std::string syscall_name(long nr) {
  static const auto reverse = [] {
    std::map<long, std::string> r;
    for (const auto& [name, n] : syscall_numbers()) r[n] = name;
    return r;
  }();
  const auto it = reverse.find(nr);
  if (it != reverse.end()) return it->second;
  return "syscall_" + std::to_string(nr);
}

inline const std::map<std::string, int>& errno_values() {
  static const auto table = detail::build_errno_table();
  return table;
}

inline std::optional<int> errno_value(const std::string& name) {
  const auto& t = errno_values();
  const auto it = t.find(name);
  if (it == t.end()) return std::nullopt;
  return it->second;
}

inline std::string errno_name(int err) {
  static const auto reverse = [] {
    std::map<int, std::string> r;
    // Reverse insertion order keeps the first (canonical) name for aliased
    // values such as EAGAIN/EWOULDBLOCK.
    for (const auto& [name, e] : errno_values()) r.emplace(e, name);
    return r;
  }();
  const auto it = reverse.find(err);
  if (it != reverse.end()) return it->second;
  return "errno_" + std::to_string(err);
}

// Kernel convention on the traced architecture: a raw syscall return in
// [-4095, -1] is -errno; anything else is success.
inline bool return_is_error(long rval) { return rval >= -4095 && rval <= -1; }

// Syscalls eligible for injection by default.  These cover the I/O,
// networking and synchronization surface a server process exercises; the
// escape hatch for anything else is explicit opt-in at model validation.
inline const std::set<std::string>& default_injectable_syscalls() {
  static const std::set<std::string> s{
      "read",     "write",   "accept4",  "recvfrom", "recvmsg", "sendmsg",
      "connect",  "epoll_ctl", "epoll_pwait", "futex", "shutdown", "unlink",
  };
  return s;
}

}  // namespace syschaos::trace
