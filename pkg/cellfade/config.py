#-------------------------------------------------------------------------------
# Licensed under the 3-Clause BSD License, see the LICENSE file for details.
#-------------------------------------------------------------------------------

import os

from configparser import ConfigParser, NoSectionError, NoOptionError
from pkgutil import get_data

from . import ConfigurationError


#-------------------------------------------------------------------------------
class Config:
    """
    A configuration dictionary with defaults. It's a wrapper around the
    :py:class:`configparser.ConfigParser`.
    """

    #---------------------------------------------------------------------------
    def __init__(self, config_files=[], package=__package__):
        """
        Load the default configuration from the specified package

        :param config_files: A list of paths to configuration files
        :param package:      Name of the package in which to search for
                             a default config file
        """
        self.conf = ConfigParser()
        default_config = get_data(package, 'default.conf').decode('utf-8')
        self.conf.read_string(default_config)
        for config_file in config_files:
            if not os.path.exists(config_file):
                raise FileNotFoundError(
                    "No such file or directory: '{}'".format(config_file))
            self.conf.read(config_file)

    #---------------------------------------------------------------------------
    def __get_with_type(self, getter, section, option, default):
        """
        Get an option of a specific type. Values that cannot be coerced are
        reported as :class:`cellfade.ConfigurationError` naming the option.
        """
        try:
            return getter(section, option)
        except (NoSectionError, NoOptionError):
            if default is not None:
                return default
            raise
        except ValueError as e:
            if default is not None:
                return default
            raise ConfigurationError('[{}] {}: {}'.format(section, option,
                                                          str(e)))

    #---------------------------------------------------------------------------
    def get_bool(self, section, option, default=None):
        """
        Get option value and coerce to boolean.

        :raises cellfade.ConfigurationError: value can not be coerced and no
                                             default is given
        :raises NoOptionError: option is missing and no default is given
        :raises NoSectionError: section is missing and no default is given
        """
        return self.__get_with_type(self.conf.getboolean, section, option,
                                    default)

    #---------------------------------------------------------------------------
    def get_int(self, section, option, default=None):
        """
        Get option value and coerce to integer. For details see
        :meth:`get_bool <Config.get_bool>`.
        """
        return self.__get_with_type(self.conf.getint, section, option, default)

    #---------------------------------------------------------------------------
    def get_float(self, section, option, default=None):
        """
        Get option value and coerce to float. For details see
        :meth:`get_bool <Config.get_bool>`.
        """
        return self.__get_with_type(self.conf.getfloat, section, option,
                                    default)

    #---------------------------------------------------------------------------
    def get_string(self, section, option, default=None):
        """
        Get option value as string.

        :raises NoOptionError: option is missing and no default is given
        :raises NoSectionError: section is missing and no default is given
        """
        return self.__get_with_type(self.conf.get, section, option, default)

    #---------------------------------------------------------------------------
    def get_list(self, section, option, default=None):
        """
        Get a whitespace-separated option value as a list of strings. An empty
        value gives an empty list.
        """
        value = self.get_string(section, option,
                                None if default is None else '')
        if value == '' and default is not None:
            return list(default)
        return value.split()

    #---------------------------------------------------------------------------
    def get_float_list(self, section, option, default=None):
        """
        Get a whitespace-separated list of floats.

        :raises cellfade.ConfigurationError: any of the items is not a number
        """
        items = self.get_list(section, option, default)
        try:
            return [float(x) for x in items]
        except ValueError as e:
            raise ConfigurationError('[{}] {}: {}'.format(section, option,
                                                          str(e)))

    #---------------------------------------------------------------------------
    def get_path(self, section, option):
        """
        Get an option holding a path. Relative paths are resolved against the
        current working directory. An empty value means that the packaged
        default should be used and is returned as `None`.
        """
        path = self.get_string(section, option, '')
        if path == '':
            return None
        path = os.path.expanduser(path)
        if os.path.isabs(path):
            return path
        return os.path.normpath(os.path.join(os.getcwd(), path))

    #---------------------------------------------------------------------------
    def get_options(self, section):
        """
        Get all options in a given section
        """
        return self.conf.items(section)

    #---------------------------------------------------------------------------
    def set(self, section, option, value):
        """
        Override an option, creating the section if necessary. Used to apply
        the command line switches on top of the configuration files.
        """
        if not self.conf.has_section(section):
            self.conf.add_section(section)
        self.conf.set(section, option, str(value))
